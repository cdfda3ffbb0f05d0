"""Exception hierarchy shared across the toolkit.

Every error carries a module-qualified ``code`` (``"ingest.missing-file"``,
``"learner.config"`` ...) so the CLI can report it on stderr verbatim.
"""


class HybridFLError(Exception):
    code = "hybridfl.error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self):
        return f"{self.code}: {super().__str__()}"


class ConfigurationError(HybridFLError, ValueError):
    code = "config.invalid"


class IngestError(HybridFLError):
    code = "ingest.error"


class DiffParseError(HybridFLError, ValueError):
    code = "diff.parse"

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class UnlocatableFault(HybridFLError):
    """None of a version's faulty statements appear in its ranked list."""

    code = "eval.unlocatable"
