"""Space signatures: base dimension p, fiber dimension q and the variable names."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .expr import DEFAULT_NAMES, FUNCTIONS

_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")
_BASE = re.compile(r"n[0-9]+$")


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    """Context for forms on Z^p x P(R^q).  Forms from different signatures never mix."""

    p: int
    q: int
    names: tuple = field(default=())

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise SignatureError(f"need p >= 1 and q >= 1, got p={self.p}, q={self.q}")
        names = tuple(self.names) if self.names else (
            ("u",) if self.q == 1 else tuple(DEFAULT_NAMES[: self.q]) if self.q <= len(DEFAULT_NAMES)
            else tuple(f"u{a + 1}" for a in range(self.q))
        )
        if len(names) != self.q:
            raise SignatureError(f"{len(names)} variable names given for q={self.q}")
        if len(set(names)) != len(names):
            raise SignatureError(f"duplicate variable names in {names}")
        for nm in names:
            if not _NAME.match(nm) or _BASE.match(nm) or nm in FUNCTIONS:
                raise SignatureError(f"invalid variable name {nm!r}")
        object.__setattr__(self, "names", names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "names": list(self.names)}
