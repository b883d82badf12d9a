"""Exception types shared across the package."""

from __future__ import annotations


class MfsheafError(Exception):
    """Base class for every error raised by mfsheaf."""


class ParseError(MfsheafError):
    def __init__(self, message: str, text: str = "", line: int = 1, column: int = 1) -> None:
        super().__init__(f"{message} (line {line}, column {column}): {text!r}")
        self.line = line
        self.column = column


class DegreeMismatch(MfsheafError):
    pass


class NotAnnihilated(MfsheafError):
    """The cokernel is not killed by the hypersurface equation."""


class SubstitutionNotCompatible(MfsheafError):
    pass


class AmbientMismatch(MfsheafError):
    pass


class UnsupportedBacking(MfsheafError):
    pass


class PreconditionViolated(MfsheafError):
    pass


class CharacteristicTooSmall(MfsheafError):
    pass


class Inconclusive(MfsheafError):
    """Randomized search exhausted its retry budget without a verdict."""


class NoMatch(MfsheafError):
    def __init__(self, message: str, hilbert_function: list[int]) -> None:
        super().__init__(f"{message}: {hilbert_function}")
        self.hilbert_function = hilbert_function


class ValidationFailed(MfsheafError):
    pass


class UnknownRule(MfsheafError):
    pass


class UnknownCheckId(MfsheafError):
    pass
