"""Exception hierarchy; ``category`` is what the CLI reports on failure."""


class BrokenWindowsError(Exception):
    category = "error"


class ConfigurationError(BrokenWindowsError):
    category = "config"


class InputError(BrokenWindowsError):
    category = "input"


class MiningError(BrokenWindowsError):
    category = "mining"


class CatalogError(BrokenWindowsError):
    category = "network"


class RateLimitError(CatalogError):
    """The catalog kept refusing requests; safe to retry later."""

    retriable = True


class UndefinedAutocorrelation(ValueError):
    """Raised for constant series, whose autocorrelation has no value."""


class UsageError(BrokenWindowsError):
    """Invalid option values; the CLI exits with status 2."""

    category = "usage"
