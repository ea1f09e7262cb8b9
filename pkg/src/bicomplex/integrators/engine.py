"""Explicit sweeps for variational lattice schemes on periodic (x, t) meshes.

A scheme is a degenerate Lagrangian on Z^2 whose dependent variables are split into
*fields* (unknowns, possibly staggered by half a cell) and *parameters* (known
per-node data such as the local step sizes xi = eps^x and tau = eps^t).  From it:

* the update equations are the Euler-Lagrange expressions of the fields;
* each equation is matched to the field it determines, namely the one at the newest time level;
* the sweep order inside one time step comes from a topological sort of the
  same-step reads, with a fixed-point fallback when the reads are cyclic;
* the tangent (linearized) updates come from symbolic partial derivatives;
* the (0,2)-forms kappa^x, kappa^t are read off from the symbolic omega and evaluated
  numerically on pairs of tangent fields.

Lattice index conventions: a field with time staggering st has values at lattice
time j meaning physical time t_j + st*tau_j.  Step n writes lattice time n + c_F,
where c_F is the smallest integer with c_F + st > 0; storage row k holds lattice time
k + c_F - 1, so row 0 is the initial layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Callable, Mapping, Sequence

import numpy as np

from ..dsl import parse
from ..expr import Expr, FiberCoord, compile_expr
from ..multisymplectic import DegenerateLagrangian, el_system, structure
from ..signature import Signature
from .mesh import Mesh

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAXIT = 200
OVERFLOW_GUARD = 1e100


class SchemeError(RuntimeError):
    pass


class InstabilityError(SchemeError):
    def __init__(self, step: int, name: str):
        super().__init__(f"field {name!r} exceeded the overflow guard at step {step}")
        self.step = step


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    name: str
    sx: float = 0.0
    st: float = 0.0

    @property
    def c(self) -> int:
        return math.floor(-self.st) + 1


@dataclass
class Equation:
    varied: str  # the field whose variation produced the equation
    unknown: int  # alpha of the determined field
    expr: Expr  # normalized: the unknown sits at offset (0, 0)
    weight: Expr
    coords: list
    rel: dict  # field coord -> storage-row offset relative to the written row
    linear: bool = True
    f_full: Callable = None
    f_rest: Callable = None
    f_coef: Callable = None
    f_partial: dict = field(default_factory=dict)
    f_weight: Callable = None

    @property
    def derivable_at_start(self) -> bool:
        return all(r == 0 for r in self.rel.values())


@dataclass
class Trajectory:
    scheme: "LatticeScheme"
    mesh: Mesh
    fields: dict
    tangents: list
    sweep_order: list
    fixed_point: bool


def _match(candidates: list) -> list:
    """A system of distinct representatives, by deterministic backtracking."""
    n = len(candidates)
    order = sorted(range(n), key=lambda e: (len(candidates[e]), e))
    assign = [None] * n
    used = set()

    def go(t):
        if t == n:
            return True
        e = order[t]
        for f in sorted(candidates[e]):
            if f not in used:
                used.add(f)
                assign[e] = f
                if go(t + 1):
                    return True
                used.discard(f)
        return False

    if not go(0):
        raise SchemeError("cannot match equations to unknowns (no newest-level assignment exists)")
    return assign


class LatticeScheme:
    """A p=2 variational scheme, periodic in x."""

    def __init__(
        self,
        name: str,
        lag: DegenerateLagrangian,
        fields: Sequence[FieldSpec],
        params: Mapping[str, str],
        constants: Mapping[str, float],
        weight: str = "xi*tau",
        overrides: Mapping[str, Expr] | None = None,
        defaults: Mapping[str, Callable] | None = None,
    ):
        sig = lag.sig
        if sig.p != 2:
            raise SchemeError("lattice schemes live on Z^2 (x, t)")
        self.name = name
        self.lag = lag
        self.sig = sig
        self.fields = list(fields)
        self.nf = len(self.fields)
        if [f.name for f in self.fields] != list(sig.names[: self.nf]):
            raise SchemeError("fields must be the leading variables of the signature")
        self.params = dict(params)  # name -> "x" | "t"
        if set(self.params) != set(sig.names[self.nf:]):
            raise SchemeError("every non-field variable must be a parameter")
        self.constants = dict(constants)
        self.defaults = dict(defaults or {})
        self.overrides = dict(overrides or {})
        self._param_alpha = {sig.index_of(nm): d for nm, d in self.params.items()}
        self.el = el_system(lag)
        wexpr = parse(weight, sig)
        self.equations = self._build_equations(wexpr)
        self.order, self.fixed_point = self._resolve_order()
        st = structure(lag)
        self.kappa = st.kappa
        self.omega = st.omega

    # ---- build time -----------------------------------------------------
    def is_param(self, c: FiberCoord) -> bool:
        return c.alpha >= self.nf

    def _time(self, c: FiberCoord) -> float:
        return c.offset[1] + self.fields[c.alpha].st

    def _build_equations(self, wexpr: Expr) -> list:
        exprs = []
        for a in range(self.nf):
            nm = self.fields[a].name
            e = self.overrides.get(nm, self.el[a])
            if isinstance(e, str):
                e = parse(e, self.sig)
            exprs.append(e)
        cands = []
        for a, e in enumerate(exprs):
            fc = [c for c in e.fiber_support() if not self.is_param(c)]
            if not fc:
                raise SchemeError(f"equation of {self.fields[a].name} has no field dependence")
            tmax = max(self._time(c) for c in fc)
            cands.append({c.alpha for c in fc if self._time(c) == tmax})
        assign = _match(cands)
        eqs = []
        for a, e in enumerate(exprs):
            X = assign[a]
            fc = [c for c in e.fiber_support() if c.alpha == X]
            tmax = max(self._time(c) for c in fc)
            top = sorted(c.offset for c in fc if self._time(c) == tmax)
            shift = (-top[0][0], -top[0][1])
            en = e.shift(shift)
            wn = wexpr.shift(shift)
            coords = sorted(en.fiber_support() | wn.fiber_support(), key=lambda c: (c.alpha, c.offset))
            cX = self.fields[X].c
            rel = {}
            for c in coords:
                if self.is_param(c):
                    continue
                r = c.offset[1] + cX - self.fields[c.alpha].c
                if r > 0:
                    raise SchemeError(f"equation for {self.fields[X].name} reads a future value {c}")
                if r < -1:
                    raise SchemeError(f"equation for {self.fields[X].name} reaches back more than one layer ({c})")
                rel[c] = r
            unk = FiberCoord(X, (0, 0))
            dX = en.diff(unk)
            eq = Equation(self.fields[a].name, X, en, wn, coords, rel)
            eq.linear = unk not in dX.fiber_support()
            consts = self.constants
            eq.f_full = compile_expr(en, coords, "np", consts)
            eq.f_coef = compile_expr(dX, coords, "np", consts)
            eq.f_rest = compile_expr(en.drop(unk), coords, "np", consts)
            eq.f_weight = compile_expr(wn, coords, "np", consts)
            for c in coords:
                if not self.is_param(c) and c != unk:
                    d = en.diff(c)
                    if not d.is_zero():
                        eq.f_partial[c] = compile_expr(d, coords, "np", consts)
            eqs.append(eq)
        return eqs

    def _resolve_order(self):
        ts = TopologicalSorter()
        by_unknown = {eq.unknown: eq for eq in self.equations}
        for eq in self.equations:
            deps = {c.alpha for c, r in eq.rel.items() if r == 0 and c.alpha != eq.unknown}
            ts.add(eq.unknown, *sorted(deps))
        self_coupled = any(
            c.alpha == eq.unknown and r == 0 and c.offset != (0, 0)
            for eq in self.equations for c, r in eq.rel.items()
        )
        try:
            order = list(ts.static_order())
            return [by_unknown[a] for a in order], self_coupled
        except CycleError:
            return sorted(self.equations, key=lambda e: e.unknown), True

    def sweep_description(self) -> list:
        return [f"{eq.varied}-equation -> {self.fields[eq.unknown].name}" for eq in self.order]

    # ---- data access ----------------------------------------------------
    def _param_rows(self, c: FiberCoord, T, mesh: Mesh):
        """Values of a parameter coordinate at lattice times T (int or array)."""
        a = c.offset[0]
        if self._param_alpha[c.alpha] == "x":
            row = np.roll(mesh.eps_x, -a)
            return row if np.ndim(T) == 0 else np.broadcast_to(row, (len(T), mesh.nx))
        et = mesh.eps_t
        idx = np.clip(T, 0, len(et) - 1)
        if np.ndim(T) == 0:
            return np.full(mesh.nx, et[idx])
        return np.broadcast_to(et[idx][:, None], (len(T), mesh.nx))

    def _args(self, eq: Equation, n, data: dict, mesh: Mesh, param_zero=False):
        """Arguments of eq at step n (int or array of steps) read from ``data``."""
        cX = self.fields[eq.unknown].c
        out = []
        for c in eq.coords:
            a, b = c.offset
            if self.is_param(c):
                if param_zero:
                    out.append(0.0)
                else:
                    out.append(self._param_rows(c, n + cX + b, mesh))
                continue
            arr = data[self.fields[c.alpha].name]
            k = n + 1 + eq.rel[c]
            rows = arr[k]
            out.append(np.roll(rows, -a, axis=-1) if a else rows)
        return out

    # ---- stepping -------------------------------------------------------
    def _solve(self, eq: Equation, n: int, data: dict, mesh: Mesh) -> np.ndarray:
        args = self._args(eq, n, data, mesh)
        if eq.linear:
            return -eq.f_rest(*args) / eq.f_coef(*args)
        ix = eq.coords.index(FiberCoord(eq.unknown, (0, 0)))
        arr = data[self.fields[eq.unknown].name]
        x = np.array(arr[max(n, 0)], dtype=float)
        for _ in range(NEWTON_MAXIT):
            args[ix] = x
            dx = eq.f_full(*args) / eq.f_coef(*args)
            x = x - dx
            if np.max(np.abs(dx)) <= NEWTON_TOL * (1.0 + np.max(np.abs(x))):
                return x
        raise SchemeError(f"Newton iteration for {self.fields[eq.unknown].name} did not converge at step {n}")

    def _tangent(self, eq: Equation, n: int, base: dict, tan: dict, mesh: Mesh) -> np.ndarray:
        args = self._args(eq, n, base, mesh)
        acc = 0.0
        cX = self.fields[eq.unknown].c
        for c, fp in eq.f_partial.items():
            a, b = c.offset
            arr = tan[self.fields[c.alpha].name]
            rows = arr[n + 1 + eq.rel[c]]
            acc = acc + fp(*args) * (np.roll(rows, -a) if a else rows)
        return -acc / eq.f_coef(*args)

    def _sweep(self, n: int, data: dict, mesh: Mesh, eqs, tangents=(), base=None):
        """Fill row n+1 of every unknown of ``eqs``; tangents follow the base values."""
        if not self.fixed_point:
            for eq in eqs:
                nm = self.fields[eq.unknown].name
                data[nm][n + 1] = self._solve(eq, n, data, mesh)
                for tan in tangents:
                    tan[nm][n + 1] = self._tangent(eq, n, data, tan, mesh)
            return
        # fixed-point iteration over the whole step
        for eq in eqs:
            nm = self.fields[eq.unknown].name
            data[nm][n + 1] = data[nm][max(n, 0)]
        for _ in range(FIXED_POINT_MAXIT):
            change = 0.0
            for eq in eqs:
                nm = self.fields[eq.unknown].name
                new = self._solve(eq, n, data, mesh)
                change = max(change, float(np.max(np.abs(new - data[nm][n + 1]))))
                data[nm][n + 1] = new
            if change <= FIXED_POINT_TOL:
                break
        else:
            raise SchemeError(f"fixed-point iteration did not converge at step {n}")
        for tan in tangents:
            for eq in eqs:
                nm = self.fields[eq.unknown].name
                tan[nm][n + 1] = tan[nm][max(n, 0)]
            for _ in range(FIXED_POINT_MAXIT):
                change = 0.0
                for eq in eqs:
                    nm = self.fields[eq.unknown].name
                    new = self._tangent(eq, n, data, tan, mesh)
                    change = max(change, float(np.max(np.abs(new - tan[nm][n + 1]))))
                    tan[nm][n + 1] = new
                if change <= FIXED_POINT_TOL * (1.0 + float(np.max(np.abs(tan[nm][n + 1])))):
                    break

    # ---- initial data -----------------------------------------------------
    def required_initial(self) -> list:
        return [self.fields[eq.unknown].name for eq in self.equations if not eq.derivable_at_start]

    def site_x(self, name: str, mesh: Mesh) -> np.ndarray:
        f = self.fields[self.sig.index_of(name)]
        return mesh.x[:-1] + f.sx * mesh.eps_x

    def site_t0(self, name: str, mesh: Mesh) -> float:
        f = self.fields[self.sig.index_of(name)]
        j = f.c - 1
        et = mesh.eps_t
        tau = et[min(max(j, 0), len(et) - 1)]
        return float(mesh.t[0] + j * et[0] + f.st * tau) if j < 0 else float(mesh.t[j] + f.st * tau)

    def initial_layer(self, mesh: Mesh, initial: Mapping, constants: Mapping | None = None) -> dict:
        """Row 0 of every field: given data, scheme defaults, then derivable fields."""
        consts = dict(self.constants)
        consts.update(constants or {})
        layer: dict = {}
        for nm, spec in initial.items():
            if nm not in [f.name for f in self.fields]:
                raise ConfigError(f"initial data for unknown field {nm!r}")
            layer[nm] = self._eval_initial(nm, spec, mesh, consts)
        derivable = {self.fields[eq.unknown].name for eq in self.equations if eq.derivable_at_start}
        for nm in self.required_initial():
            if nm not in layer:
                if nm in self.defaults:
                    layer[nm] = np.asarray(self.defaults[nm](self, mesh, layer, consts), dtype=float)
                else:
                    raise ConfigError(f"initial data for {nm!r} is required")
        data = {f.name: np.zeros((1, mesh.nx)) for f in self.fields}
        for nm, v in layer.items():
            data[nm][0] = v
        for eq in self.order:
            nm = self.fields[eq.unknown].name
            if nm in derivable and nm not in layer:
                data[nm][0] = self._solve_initial(eq, data, mesh)
        return {k: v[0] for k, v in data.items()}

    def _solve_initial(self, eq, data, mesh):
        return self._solve(eq, -1, data, mesh)

    def _eval_initial(self, nm, spec, mesh, consts):
        xs = self.site_x(nm, mesh)
        if callable(spec):
            return np.asarray(spec(xs), dtype=float) * np.ones(mesh.nx)
        if isinstance(spec, (int, float)):
            return np.full(mesh.nx, float(spec))
        if isinstance(spec, np.ndarray):
            if spec.shape != (mesh.nx,):
                raise ConfigError(f"initial array for {nm!r} has shape {spec.shape}, expected ({mesh.nx},)")
            return spec.astype(float)
        return eval_profile(spec, xs, self.site_t0(nm, mesh), consts)

    # ---- runs -------------------------------------------------------------
    def run(self, mesh: Mesh, initial: Mapping, seeds: Sequence[Mapping] = (), constants: Mapping | None = None) -> Trajectory:
        """Integrate all nt steps.  ``seeds`` are initial tangent layers (dicts of arrays)."""
        N = mesh.nt
        first = self.initial_layer(mesh, initial, constants)
        data = {nm: np.zeros((N + 1, mesh.nx)) for nm in first}
        for nm, v in first.items():
            data[nm][0] = v
        tans = []
        for seed in seeds:
            t0 = self.tangent_initial_layer(mesh, first, seed)
            tan = {nm: np.zeros((N + 1, mesh.nx)) for nm in first}
            for nm, v in t0.items():
                tan[nm][0] = v
            tans.append(tan)
        for n in range(N):
            self._sweep(n, data, mesh, self.order, tans)
            for nm, arr in data.items():
                row = arr[n + 1]
                if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > OVERFLOW_GUARD:
                    raise InstabilityError(n, nm)
        return Trajectory(self, mesh, data, tans, self.sweep_description(), self.fixed_point)

    def tangent_initial_layer(self, mesh: Mesh, base_layer: dict, seed: Mapping) -> dict:
        required = self.required_initial()
        tan = {f.name: np.zeros((1, mesh.nx)) for f in self.fields}
        base = {nm: v[None, :] for nm, v in base_layer.items()}
        for nm in required:
            tan[nm][0] = np.asarray(seed.get(nm, 0.0), dtype=float) * np.ones(mesh.nx)
        for eq in self.order:
            nm = self.fields[eq.unknown].name
            if eq.derivable_at_start and nm not in required:
                if nm in seed:
                    tan[nm][0] = seed[nm]
                else:
                    tan[nm][0] = self._tangent(eq, -1, base, tan, mesh)
        return {k: v[0] for k, v in tan.items()}

    def random_seeds(self, mesh: Mesh, seed: int, count: int = 2, scale: float = 1.0) -> list:
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            out.append({nm: scale * rng.standard_normal(mesh.nx) for nm in self.required_initial()})
        return out

    # ---- diagnostics ------------------------------------------------------
    def scheme_residuals(self, traj: Trajectory, data: dict | None = None, linearized: bool = False) -> np.ndarray:
        """max over equations of |E/weight| per step n (shape (nt,))."""
        data = traj.fields if data is None else data
        mesh = traj.mesh
        steps = np.arange(mesh.nt)
        out = np.zeros(mesh.nt)
        for eq in self.equations:
            args = self._args(eq, steps, traj.fields, mesh)
            w = eq.f_weight(*args)
            if linearized:
                acc = 0.0
                cX = self.fields[eq.unknown].c
                for c, fp in list(eq.f_partial.items()) + [(FiberCoord(eq.unknown, (0, 0)), eq.f_coef)]:
                    a = c.offset[0]
                    rows = data[self.fields[c.alpha].name][steps + 1 + eq.rel[c]]
                    acc = acc + fp(*args) * (np.roll(rows, -a, axis=-1) if a else rows)
                r = acc / w
            else:
                r = eq.f_full(*args) / w
            out = np.maximum(out, np.max(np.abs(r), axis=1))
        return out

    def _kappa_eval(self, k: int, traj: Trajectory, t1: dict, t2: dict):
        """kappa^k on (t1, t2) at every valid anchor; returns (first lattice time, array)."""
        mesh = traj.mesh
        N = mesh.nt
        form = self.kappa[k]
        # parameters are never varied, so factors d_v xi, d_v tau contribute nothing
        terms = [(v, c) for (h, v), c in form.terms() if not any(self.is_param(x) for x in v)]
        lo, hi = -10**9, 10**9
        for v, c in terms:
            for x in list(v) + [y for y in c.fiber_support() if not self.is_param(y)]:
                cG = self.fields[x.alpha].c
                # storage row = j + b - cG + 1 in [0, N]
                lo = max(lo, cG - 1 - x.offset[1])
                hi = min(hi, N + cG - 1 - x.offset[1])
        if lo > hi:
            return lo, np.zeros((0, mesh.nx))
        js = np.arange(lo, hi + 1)

        def rows(x, data):
            r = data[self.fields[x.alpha].name][js + x.offset[1] - self.fields[x.alpha].c + 1]
            a = x.offset[0]
            return np.roll(r, -a, axis=-1) if a else r

        total = np.zeros((len(js), mesh.nx))
        for v, c in terms:
            x1, x2 = v
            coords = sorted(c.fiber_support(), key=lambda y: (y.alpha, y.offset))
            fc = compile_expr(c, coords, "np", self.constants)
            cargs = [self._param_rows(y, js + y.offset[1], mesh) if self.is_param(y) else rows(y, traj.fields)
                     for y in coords]
            coef = fc(*cargs)
            total = total + coef * (rows(x1, t1) * rows(x2, t2) - rows(x1, t2) * rows(x2, t1))
        return lo, total

    def ms_residual(self, traj: Trajectory, pair: tuple = (0, 1)) -> dict:
        """Per-cell D_x kappa^x + D_t kappa^t on a tangent pair, with scales."""
        t1, t2 = traj.tangents[pair[0]], traj.tangents[pair[1]]
        jx, kx = self._kappa_eval(0, traj, t1, t2)
        jt, kt = self._kappa_eval(1, traj, t1, t2)
        lo = max(jx, jt)
        hi = min(jx + len(kx) - 1, jt + len(kt) - 2)
        js = np.arange(lo, hi + 1)
        KX = kx[js - jx]
        R = (np.roll(KX, -1, axis=1) - KX) + (kt[js - jt + 1] - kt[js - jt])
        scale = max(float(np.max(np.abs(kx))) if kx.size else 0.0, float(np.max(np.abs(kt))) if kt.size else 0.0)
        omega_t = kt.sum(axis=1)
        abs_t = np.abs(kt).sum(axis=1)
        return {
            "cells_first_j": int(lo),
            "residual": R,
            "kappa_scale": scale,
            "kappa_t_first_j": int(jt),
            "omega_t_sum": omega_t,
            "omega_t_abs": abs_t,
        }


def eval_profile(spec: str, xs: np.ndarray, t0: float, consts: Mapping) -> np.ndarray:
    """Evaluate a DSL expression in the named constants x and t (and config constants)."""
    sig = Signature(1, 1, ("field_",))
    try:
        e = parse(spec, sig)
    except ValueError as exc:
        raise ConfigError(f"initial expression {spec!r}: {exc}") from None
    if e.fiber_support():
        raise ConfigError(f"initial expression {spec!r} must not reference fields")
    from ..expr import Constant

    f = compile_expr(e, [Constant("x"), Constant("t")], "np", {k: v for k, v in consts.items() if k not in ("x", "t")})
    return np.asarray(f(xs, t0), dtype=float) * np.ones_like(xs)
