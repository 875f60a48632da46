"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class CivError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CivError):
    """A domain object violates one of its invariants.

    Each violation carries a stable machine-readable ``code`` so tests and
    callers can distinguish failure modes without parsing messages.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class DuplicateId(CivError):
    pass


class ParseError(CivError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(CivError):
    pass


class DimError(CivError):
    pass


class ZeroVector(CivError):
    pass


class EmptyInput(CivError):
    pass


class MissingClass(CivError):
    pass


class DivergenceError(CivError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class LengthError(CivError):
    pass


class KTooLarge(CivError):
    pass


class MissingAttributes(CivError):
    def __init__(self, item_id: str):
        super().__init__(f"no predicted attributes for {item_id!r}")
        self.item_id = item_id


class TargetUnreachable(CivError):
    def __init__(self, target: int, lo: int, hi: int):
        super().__init__(
            f"target {target} outside achievable retained range [{lo}, {hi}]"
        )
        self.target = target
        self.achievable = (lo, hi)


class Incompatible(CivError):
    def __init__(self, chart_type: str, reason: str):
        super().__init__(f"{chart_type}: {reason}")
        self.chart_type = chart_type
        self.reason = reason


class IllegalToggle(CivError):
    pass


class EmptyBank(CivError):
    pass


class TransportError(CivError):
    pass


class ParseRejected(CivError):
    pass


class MissingTruth(CivError):
    pass


class AmbiguousExtremum(CivError):
    pass


class UnknownItem(CivError):
    def __init__(self, ids):
        ids = list(ids)
        super().__init__(f"unknown item ids: {ids}")
        self.ids = ids


class MissingDependency(CivError):
    def __init__(self, stage: str, detail: str = ""):
        msg = f"stage {stage!r} has not produced its outputs yet"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.stage = stage


class ConfigError(CivError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# Unwritable paths and similar I/O failures surface as the built-in OSError.
IoError = OSError
