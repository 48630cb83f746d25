"""Exception hierarchy shared across the package."""


class DravBiasError(Exception):
    pass


class UnknownScript(DravBiasError):
    pass


class EmptySentence(DravBiasError, ValueError):
    pass


class UnsupportedLanguage(DravBiasError, ValueError):
    pass


class ConflictingCues(DravBiasError):
    """Source sentence carries both masculine and feminine cues."""

    def __init__(self, message, cues=()):
        super().__init__(message)
        self.cues = list(cues)


class NoSuffixEvidence(DravBiasError):
    pass


class NoLexiconEntry(DravBiasError):
    pass


class BackendError(DravBiasError):
    """Transport or API failure in a translation backend."""


class AuthMissing(BackendError):
    pass


class Timeout(BackendError):
    pass


class RateLimited(BackendError):
    pass


class FixtureMiss(BackendError):
    pass


class ConfigError(DravBiasError, ValueError):
    pass


class SchemaError(DravBiasError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateId(SchemaError):
    pass


class NoLabels(DravBiasError, ValueError):
    pass
