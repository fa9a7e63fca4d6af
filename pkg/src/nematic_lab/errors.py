"""Exception types raised across the package."""

from __future__ import annotations


class NematicLabError(Exception):
    """Base class for all package errors."""


class NonPositiveMass(NematicLabError, ValueError):
    pass


class AliasedMode(NematicLabError, ValueError):
    pass


class IncompatibleTriple(NematicLabError, ValueError):
    pass


class SupportMismatch(NematicLabError, ValueError):
    pass


class InsufficientData(NematicLabError, ValueError):
    pass


class R2TooSmall(NematicLabError, ValueError):
    pass


class UnstableStep(NematicLabError, FloatingPointError):
    """A solver step blew up or produced negativity beyond the clamp tolerance.

    ``time`` is filled in by the driver when the failure happens inside
    :func:`nematic_lab.fp_solver.evolve`.
    """

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time

    def __str__(self) -> str:
        base = super().__str__()
        if self.time is None:
            return base
        return f"{base} (t={self.time:.17g})"


class ParseError(NematicLabError, ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(NematicLabError, ValueError):
    """Carries every violated invariant, not just the first one."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
