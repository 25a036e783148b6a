"""Exception types raised across the pipeline."""


class PlayerValueError(Exception):
    """Base class for every error raised by this package."""


# ingestion

class IngestError(PlayerValueError, ValueError):
    pass


class MalformedRow(IngestError):
    def __init__(self, line, reason=""):
        self.line = line
        super().__init__(f"line {line}: {reason}" if reason else f"line {line}")


class UnknownColumn(IngestError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown column {name!r}")


class DuplicateKey(IngestError):
    pass


class NonPositiveValue(IngestError):
    pass


class UnknownPosition(IngestError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"unknown position label {label!r}")


class MissingBirthDate(IngestError):
    pass


class EmptyJoin(IngestError):
    pass


class InconsistentCorpus(IngestError):
    """A cross-source invariant fails, e.g. a match dated before birth."""


# features

class FeatureError(PlayerValueError, ValueError):
    pass


class NoPlayingTime(FeatureError):
    pass


class EmptyTable(FeatureError):
    pass


# models

class NonFiniteInput(PlayerValueError, ValueError):
    pass


class DimensionMismatch(PlayerValueError, ValueError):
    pass


class EmptyTargets(PlayerValueError, ValueError):
    pass


class LeafNode(PlayerValueError, ValueError):
    pass


class NoSplits(PlayerValueError, ValueError):
    pass


class TooFewSamples(PlayerValueError, ValueError):
    pass


class ItemSetMismatch(PlayerValueError, ValueError):
    pass


# command line

class ConfigError(PlayerValueError, ValueError):
    pass
