"""Exception hierarchy shared by all evhmm modules."""


class EvhmmError(Exception):
    """Base class for all errors raised by this package."""


class FrameMismatch(EvhmmError):
    """Two mass functions defined on different frames were combined."""


class NotAMass(EvhmmError):
    """A commonality table has no valid mass function behind it."""


class TotalConflict(EvhmmError):
    """All belief mass sits on the empty set; no decision is possible."""


class AllZeroLikelihoods(EvhmmError):
    """Every state assigns zero likelihood to an observation."""


class EmptyObservation(EvhmmError):
    """A decoder was called on an empty token sequence."""


class EmptyCorpus(EvhmmError):
    """Count accumulation was requested on an empty corpus."""


class EmptyCounts(EvhmmError):
    """Model estimation was requested on empty count tables."""


class NoTrigrams(EvhmmError):
    """Deleted interpolation needs at least one trigram count."""


class ParseError(EvhmmError):
    """Malformed corpus input.  Carries the 1-based line number."""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class FormatError(EvhmmError):
    """Malformed model file.  Carries the section name and line number."""

    def __init__(self, section, line, reason):
        super().__init__(f"section [{section}], line {line}: {reason}")
        self.section = section
        self.line = line
        self.reason = reason


class VersionError(EvhmmError):
    """Model file header names an unknown format version."""
