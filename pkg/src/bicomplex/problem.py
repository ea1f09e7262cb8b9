"""Problem specifications (TOML/JSON) for the symbolic commands.

::

    [signature]  p, q, names
    [problem]    lagrangian | L (p x q table) + H | source (q exprs) | characteristic (q exprs)
    [expected]   optional golden values: el, omega, eta, kappa, lambda_components
    [meta]       name, provenance of each golden value

Golden forms are lists of terms ``{coef, vertical = [coords], horizontal = [directions]}``
read in the display order coef * d_v(vertical...) ^ Delta^(horizontal...), with
1-based directions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .dsl import parse
from .expr import Expr, FiberCoord
from .forms import Form
from .multisymplectic import DegenerateLagrangian
from .signature import Signature, SignatureError

FIXTURES = Path(__file__).parent / "fixtures"


class ProblemError(ValueError):
    pass


@dataclass
class Problem:
    sig: Signature
    raw: dict
    lagrangian: Expr | None = None
    degenerate: DegenerateLagrangian | None = None
    source: list | None = None
    characteristic: list | None = None
    expected: dict = field(default_factory=dict)

    @property
    def density(self) -> Expr:
        if self.lagrangian is not None:
            return self.lagrangian
        if self.degenerate is not None:
            return self.degenerate.density()
        raise ProblemError("the problem has no Lagrangian (give problem.lagrangian or problem.L/H)")


def read_document(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists() and not path.is_absolute():
        for cand in (FIXTURES / path.name, FIXTURES / f"{path.name}.toml"):
            if cand.exists():
                path = cand
                break
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc.strerror}") from None
    try:
        if path.suffix == ".json":
            return json.loads(text)
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    except ValueError as exc:
        raise ProblemError(f"{path}: {exc}") from None


def _exprs(values, sig: Signature, what: str) -> list:
    if not isinstance(values, list):
        raise ProblemError(f"{what} must be a list of expressions")
    return [parse(str(v), sig) for v in values]


def load_problem(source: str | Path | Mapping) -> Problem:
    doc = dict(source) if isinstance(source, Mapping) else read_document(source)
    s = doc.get("signature")
    if not isinstance(s, Mapping) or "p" not in s or "q" not in s:
        raise ProblemError("[signature] with p and q is required")
    try:
        sig = Signature(int(s["p"]), int(s["q"]), tuple(s["names"]) if "names" in s else None)
    except (TypeError, ValueError, SignatureError) as exc:
        raise ProblemError(f"signature: {exc}") from None
    pr = doc.get("problem", {})
    prob = Problem(sig, doc, expected=dict(doc.get("expected", {})))
    if "lagrangian" in pr:
        prob.lagrangian = parse(str(pr["lagrangian"]), sig)
    if "L" in pr:
        prob.degenerate = DegenerateLagrangian(sig, [[str(x) for x in row] for row in pr["L"]], str(pr.get("H", "0")))
    if "source" in pr:
        prob.source = _exprs(pr["source"], sig, "problem.source")
    if "characteristic" in pr:
        prob.characteristic = _exprs(pr["characteristic"], sig, "problem.characteristic")
        if len(prob.characteristic) != sig.q:
            raise ProblemError(f"characteristic needs {sig.q} components")
    return prob


def _coord(text: str, sig: Signature) -> FiberCoord:
    e = parse(text, sig)
    atoms = list(e.terms())
    if len(atoms) == 1:
        mono, c = atoms[0]
        if c == 1 and len(mono) == 1 and mono[0][1] == 1 and type(mono[0][0]) is FiberCoord:
            return mono[0][0]
    raise ProblemError(f"{text!r} is not a single fiber coordinate")


def form_from_terms(sig: Signature, terms: list) -> Form:
    """Build a form from golden terms written as coef * d_v(...) ^ Delta^(...)."""
    out = Form._make(sig, {})
    for t in terms:
        coef = parse(str(t.get("coef", "1")), sig)
        vert = [_coord(str(c), sig) for c in t.get("vertical", [])]
        hor = [int(i) - 1 for i in t.get("horizontal", [])]
        # moving the horizontal block in front of the vertical block
        sign = -1 if (len(hor) * len(vert)) % 2 else 1
        out = out + Form.from_factors(sig, coef.scale(sign), hor, vert)
    return out


def fixture_path(name: str) -> Path:
    return FIXTURES / name

