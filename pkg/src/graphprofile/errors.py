"""Exception types shared across the package.

The CLI maps these onto exit codes: config/usage errors exit 2, data
validation errors exit 3, numeric failures exit 4.
"""


class ConfigError(ValueError):
    """Invalid configuration value or unusable combination of options."""


class DatasetError(ValueError):
    """Malformed dataset file or a record violating a structural invariant."""


class VocabularyError(ValueError):
    """Vocabulary cannot be built or sampled from (e.g. empty view)."""


class NumericError(RuntimeError):
    """Non-finite values detected in trained parameters."""
