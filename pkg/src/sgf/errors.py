"""Exception hierarchy.  Every error carries a machine-readable ``code``."""

from __future__ import annotations


class SGFError(Exception):
    code = "ERROR"

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self)}


class InvalidInput(SGFError, ValueError):
    code = "INVALID_INPUT"


class AlphabetError(InvalidInput):
    code = "ALPHABET"


class AvoidInSubgroup(SGFError):
    code = "AVOID_IN_SUBGROUP"


class AlreadySmaller(SGFError):
    code = "ALREADY_SMALLER"


class InfiniteIndexError(SGFError):
    code = "INFINITE_INDEX"


class CapExceeded(SGFError):
    """An enumeration limit was hit; retry with a smaller quotient or larger caps."""

    code = "CAP_EXCEEDED"

    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} exceeded cap {cap}; raise SGF_CAPS or try another seed")
        self.what = what
        self.cap = cap

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self), "what": self.what, "cap": self.cap}


class LiftNotFound(SGFError):
    code = "LIFT_NOT_FOUND"


class SearchFailed(SGFError):
    code = "SEARCH_FAILED"
