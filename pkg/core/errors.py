# core/errors.py


class CorpusValidationError(ValueError):
    """Raised when a corpus file or a discussion violates the input schema."""

    def __init__(self, message: str, discussion_id: str | None = None, field: str | None = None):
        self.discussion_id = discussion_id
        self.field = field

        prefix = ""
        if discussion_id is not None:
            prefix = f"discussion '{discussion_id}'"
            if field:
                prefix += f", field '{field}'"
            prefix += ": "

        super().__init__(prefix + message)


class ModelMismatchError(ValueError):
    """Weights, stats or feature registries that do not belong together."""


class InstanceTooLargeError(ValueError):
    """The exhaustive oracle refuses instances beyond its enumeration budget."""


class TrainingDataError(ValueError):
    """Training input lacks what the requested learner needs."""
