# utils/text_helpers.py

import re
from functools import lru_cache
from pathlib import Path


STOPWORDS_PATH = Path(__file__).resolve().parent.parent / "resources" / "stopwords.txt"


def normalize_token(token) -> str:
    """
    Lowercase and drop every character that is not a letter or digit.
    Returns "" for tokens made only of punctuation.
    """

    if token is None:
        return ""

    token = str(token).replace("\xa0", " ").lower().strip()

    return re.sub(r"[^a-z0-9]", "", token)


def tokenize_text(text: str) -> list:
    """Whitespace tokenization followed by normalize_token; empty tokens dropped."""

    if not text:
        return []

    tokens = []

    for raw in str(text).split():
        token = normalize_token(raw)
        if token:
            tokens.append(token)

    return tokens


@lru_cache(maxsize=None)
def load_stopwords(path: str | None = None) -> frozenset:

    source = Path(path) if path else STOPWORDS_PATH

    words = set()

    for line in source.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line.lower())

    return frozenset(words)


def is_stopword(word: str) -> bool:
    return normalize_token(word) in load_stopwords()


def is_stop_token(token) -> bool:
    """A corpus token counts as a stopword if flagged so or if its lemma is on the list."""
    return token.is_stopword or token.lemma in load_stopwords()
