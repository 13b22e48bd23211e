"""Exception types shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


class AtlasError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateFace(AtlasError):
    """The landmark geometry cannot support localization (coincident anchors,
    zero reference distance, and the like)."""


class ExpressionError(AtlasError):
    """Base class for coordinate-expression errors; carries a source offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        super().__init__(message, offset)
        self.expected = expected

    def __str__(self) -> str:
        base = super().__str__()
        if self.expected:
            opts = ", ".join(sorted(self.expected))
            return f"{base} at offset {self.offset} (expected: {opts})"
        return f"{base} at offset {self.offset}"


class UnknownFunctionError(ExpressionError):
    """Only GetX and GetY exist; anything else called like a function lands here."""

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown function {name!r} (only GetX/GetY are defined)", offset)
        self.name = name


class AtlasFileError(AtlasError):
    """Base class for atlas/channel data-file errors."""


class BadHeader(AtlasFileError):
    def __init__(self, missing: list[str], extra: list[str]):
        self.missing = missing
        self.extra = extra
        parts = []
        if missing:
            parts.append("missing columns: " + ", ".join(missing))
        if extra:
            parts.append("unexpected columns: " + ", ".join(extra))
        super().__init__("bad header (" + "; ".join(parts) + ")")


@dataclass(frozen=True)
class RowError:
    """One diagnostic tied to a data-file line (1-based, header is line 1)."""

    line: int
    cause: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.cause}"


class AtlasParseError(AtlasFileError):
    """All row-level failures of one parse, batched for the author."""

    def __init__(self, errors: list[RowError]):
        self.errors = list(errors)
        summary = "; ".join(str(e) for e in self.errors[:8])
        if len(self.errors) > 8:
            summary += f"; ... {len(self.errors) - 8} more"
        super().__init__(f"{len(self.errors)} row error(s): {summary}")


class CompileError(AtlasError):
    """Base class for semantic errors found while compiling an atlas."""


class CycleError(CompileError):
    def __init__(self, cycle: list):
        self.cycle = list(cycle)
        chain = " -> ".join(str(p) for p in self.cycle)
        super().__init__(f"reference cycle: {chain}")


class UndefinedReference(CompileError):
    def __init__(self, referrer, ref: str):
        self.referrer = referrer
        self.ref = ref
        super().__init__(f"{referrer} references undefined {ref}")


class SideAccessError(CompileError):
    """Raised for side-qualifier misuse: a non-symmetric definition touching a
    symmetric point without .L/.R, or a qualifier on a center point."""


class DimensionError(CompileError):
    """Product of two length-valued subexpressions (cun or coordinates)."""


class ChannelError(AtlasError):
    """Base class for channel-registry errors."""


class UnknownPoint(ChannelError):
    def __init__(self, channel_code: str, point: str):
        super().__init__(f"channel {channel_code} flow references unknown point {point}")
        self.channel_code = channel_code
        self.point = point


class FrameFormatError(AtlasError):
    """A landmark-frame record does not satisfy the frame schema."""
