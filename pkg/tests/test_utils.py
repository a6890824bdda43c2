import logging

import pytest
from openpyxl import Workbook

from core.corpus import Token
from core.errors import CorpusValidationError
from utils.excel_helpers import cell_value, score_status
from utils.logging_setup import configure_logging
from utils.schema_checker import check_fields, get_expected_fields
from utils.text_helpers import is_stop_token, is_stopword, load_stopwords, normalize_token, tokenize_text


class TestText:

    def test_normalize_token(self):
        assert normalize_token(" Battery! ") == "battery"
        assert normalize_token("--") == ""
        assert normalize_token(None) == ""

    def test_tokenize_drops_punctuation_only_tokens(self):
        assert tokenize_text("Solar panels -- cheap, really?") == ["solar", "panels", "cheap", "really"]
        assert tokenize_text("") == []

    def test_stopwords(self):
        assert "the" in load_stopwords()
        assert is_stopword("The")
        assert not is_stopword("battery")

    def test_stop_tokens_use_flag_or_list(self):
        assert is_stop_token(Token("the", "the", "DT", False))
        assert is_stop_token(Token("Gadget", "gadget", "NN", True))
        assert not is_stop_token(Token("batteries", "battery", "NNS", False))


class TestSchema:

    def test_exact_fields(self):
        record = {name: None for name in get_expected_fields("dep")}
        assert check_fields(record, "dep") is record

    def test_missing_and_unexpected(self):
        with pytest.raises(CorpusValidationError, match="missing"):
            check_fields({"head": 1}, "dep", discussion_id="d9")
        with pytest.raises(CorpusValidationError, match="unexpected"):
            check_fields({"head": 1, "dep": 2, "rel": "x", "weight": 1}, "dep")

    def test_not_an_object(self):
        with pytest.raises(CorpusValidationError, match="expected an object"):
            check_fields([], "token")

    def test_unknown_record_type(self):
        with pytest.raises(ValueError):
            get_expected_fields("speaker")


class TestExcel:

    def test_score_buckets(self):
        assert [score_status(v) for v in (0.9, 0.7, 0.5, 0.1)] == ["Good", "Medium", "Low", "Critical"]

    def test_cell_values(self):
        assert cell_value(float("nan")) is None
        assert cell_value(("a", "b")) == "('a', 'b')"
        assert cell_value(3) == 3

        sheet = Workbook().active
        sheet.append([cell_value([1, 2])])
        assert sheet["A1"].value == "[1, 2]"


class TestLogging:

    def test_single_handler(self, tmp_path):
        log_file = tmp_path / "run.log"
        configure_logging(logging.DEBUG, log_file=str(log_file))
        configure_logging(logging.DEBUG, log_file=str(log_file))

        root = logging.getLogger()
        assert len(root.handlers) == 2
        assert root.level == logging.DEBUG

        logging.getLogger("core.test").debug("hello")
        for handler in root.handlers:
            handler.flush()
        assert "core.test: hello" in log_file.read_text(encoding="utf-8")

        configure_logging()
