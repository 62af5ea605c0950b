"""Exception types shared across the pipeline."""


class SigmineError(Exception):
    """Base class for all errors raised by this package."""


class TraceValidationError(SigmineError):
    """A trace matrix violates a structural invariant (shape, domain, labels)."""


class TraceFormatError(SigmineError):
    """A trace/flag/detection file cannot be parsed under the documented format."""


class SchemaMismatchError(SigmineError):
    """Two pipeline stages disagree on the feature schema (names or width)."""


class ConfigError(SigmineError):
    """A configuration value is outside its documented domain."""


class RuleFileError(SigmineError):
    """A rule file is malformed or inconsistent with the expected schema."""
