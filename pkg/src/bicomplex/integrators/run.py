"""Config-driven integrator runs: validation, CSV rows and the JSON run manifest.

Config (TOML or JSON)::

    scheme = "wave"            # wave | wave-control | zakharov | euler-b
    seed = 1                   # tangent seeds and mesh jitter
    bc = "periodic"
    [mesh]   nx, nt, hx | x (node array), ht | t (node array), optional t_ratio
    [params] potential, eps, constants = {...}    (euler-b: H, constants)
    [initial] field = "DSL expression in x" | number
    [thresholds] column = bound              (checked against the column maximum)
    [output] csv, manifest                   (paths relative to the config file)
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import engine
from .engine import ConfigError, FIXED_POINT_TOL, NEWTON_TOL, OVERFLOW_GUARD
from .euler_b import EulerB
from .mesh import Mesh, MeshError
from .schemes import build_scheme

COLUMNS = ["step", "time", "max_scheme_residual", "ms_residual_max", "ms_residual_l2", "omega_drift"]
SCHEMES = ("wave", "wave-control", "zakharov", "euler-b")
TOP_KEYS = {"scheme", "seed", "bc", "mesh", "params", "initial", "thresholds", "output", "meta"}


def load_config(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix == ".json":
            return json.loads(text)
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_hash(cfg: Mapping) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _positive_int(d: Mapping, key: str, minimum: int) -> int:
    v = d.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ConfigError(f"mesh.{key} must be an integer >= {minimum}, got {v!r}")
    return v


def validate(cfg: Mapping) -> dict:
    """Check the config shape; returns a normalized copy."""
    if not isinstance(cfg, Mapping):
        raise ConfigError("config must be a table/object")
    extra = set(cfg) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    scheme = cfg.get("scheme")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}, got {scheme!r}")
    bc = cfg.get("bc", "periodic")
    if scheme != "euler-b" and bc != "periodic":
        raise ConfigError(f"boundary condition {bc!r} is not supported; only 'periodic' is implemented")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    mesh = dict(cfg.get("mesh", {}))
    if "t" in mesh:
        if len(mesh["t"]) < 2:
            raise ConfigError("mesh.t needs at least two nodes (nt >= 1)")
    else:
        _positive_int(mesh, "nt", 1)
    if scheme != "euler-b" and "x" not in mesh:
        _positive_int(mesh, "nx", 3)
    thresholds = dict(cfg.get("thresholds", {}))
    for k, v in thresholds.items():
        if k not in COLUMNS[2:]:
            raise ConfigError(f"unknown threshold {k!r}; choose from {COLUMNS[2:]}")
        if not isinstance(v, (int, float)) or v < 0:
            raise ConfigError(f"threshold {k} must be a non-negative number")
    out = dict(cfg)
    out.update(scheme=scheme, bc=bc, seed=seed, mesh=mesh, thresholds=thresholds)
    return out


def build_mesh(mcfg: Mapping, seed: int) -> Mesh:
    try:
        if "x" in mcfg or "t" in mcfg:
            nx, nt = mcfg.get("nx"), mcfg.get("nt")
            x = np.asarray(mcfg["x"], dtype=float) if "x" in mcfg else mcfg["hx"] * np.arange(nx + 1)
            t = np.asarray(mcfg["t"], dtype=float) if "t" in mcfg else mcfg["ht"] * np.arange(nt + 1)
            return Mesh(x, t)
        ratio = float(mcfg.get("t_ratio", 1.0))
        if ratio != 1.0:
            return Mesh.jittered_t(mcfg["nx"], mcfg["nt"], float(mcfg["hx"]), float(mcfg["ht"]), ratio, seed)
        return Mesh.uniform(mcfg["nx"], mcfg["nt"], float(mcfg["hx"]), float(mcfg["ht"]))
    except KeyError as exc:
        raise ConfigError(f"mesh is missing {exc.args[0]!r}") from None
    except MeshError as exc:
        raise ConfigError(f"mesh: {exc}") from None


@dataclass
class RunResult:
    rows: list
    manifest: dict

    @property
    def passed(self) -> bool:
        return self.manifest["thresholds_met"]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])
        return buf.getvalue()

    def manifest_text(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _versions() -> dict:
    from .. import __version__

    return {"bicomplex": __version__, "python": platform.python_version(), "numpy": np.__version__}


def _column_max(rows, col):
    vals = [r[col] for r in rows if r[col] is not None]
    return max(vals) if vals else None


def _finish(cfg: Mapping, rows: list, extra: dict) -> RunResult:
    checks = {}
    for col, bound in sorted(cfg["thresholds"].items()):
        m = _column_max(rows, col)
        checks[col] = {"max": m, "bound": bound, "met": bool(m is not None and m <= bound)}
    manifest = {
        "scheme": cfg["scheme"],
        "config_hash": config_hash(cfg),
        "seeds": {"run": cfg["seed"]},
        "versions": _versions(),
        "tolerances": {
            "newton": NEWTON_TOL,
            "fixed_point": FIXED_POINT_TOL,
            "overflow_guard": OVERFLOW_GUARD,
            "newton_max_iterations": engine.NEWTON_MAXIT,
        },
        "summary": {c: _column_max(rows, c) for c in COLUMNS[2:]},
        "thresholds": checks,
        "thresholds_met": all(c["met"] for c in checks.values()),
        "steps": len(rows),
    }
    manifest.update(extra)
    return RunResult(rows, manifest)


def run_config(cfg: Mapping) -> RunResult:
    cfg = validate(cfg)
    if cfg["scheme"] == "euler-b":
        return _run_mechanics(cfg)
    return _run_lattice(cfg)


def _run_lattice(cfg: Mapping) -> RunResult:
    seed = cfg["seed"]
    mesh = build_mesh(cfg["mesh"], seed)
    scheme = build_scheme(cfg["scheme"], cfg.get("params"))
    initial = dict(cfg.get("initial", {}))
    traj = scheme.run(mesh, initial, scheme.random_seeds(mesh, seed))
    res = scheme.scheme_residuals(traj)
    ms = scheme.ms_residual(traj)
    R, scale = ms["residual"], ms["kappa_scale"]
    scale = scale if scale > 0 else 1.0
    j0 = ms["cells_first_j"]
    om, om_abs, jt = ms["omega_t_sum"], ms["omega_t_abs"], ms["kappa_t_first_j"]
    om_scale = float(np.max(om_abs)) if om_abs.size and np.max(om_abs) > 0 else 1.0
    rows = []
    for n in range(mesh.nt):
        j = n  # cell between lattice times n and n+1
        r = {"step": n + 1, "time": float(mesh.t[n + 1]), "max_scheme_residual": float(res[n]),
             "ms_residual_max": None, "ms_residual_l2": None, "omega_drift": None}
        if 0 <= j - j0 < len(R):
            cell = R[j - j0] / scale
            r["ms_residual_max"] = float(np.max(np.abs(cell)))
            r["ms_residual_l2"] = float(np.sqrt(np.mean(cell ** 2)))
        if 0 <= n + 1 - jt < len(om):
            r["omega_drift"] = float(abs(om[n + 1 - jt] - om[0]) / om_scale)
        rows.append(r)
    extra = {
        "mesh": {"nx": mesh.nx, "nt": mesh.nt, **mesh.describe()},
        "sweep_order": traj.sweep_order,
        "fixed_point_iteration": traj.fixed_point,
        "initial_required": scheme.required_initial(),
        "seeds": {"run": seed, "tangent": seed, "mesh_jitter": seed},
        "normalization": {
            "max_scheme_residual": "max over equations of |E|/(xi*tau) at the step",
            "ms_residual": "cell residual D_x kappa^x + D_t kappa^t divided by max |kappa| over the run",
            "omega_drift": "|sum_i kappa^t(j) - sum_i kappa^t(j0)| / max_j sum_i |kappa^t(j)|",
        },
    }
    return _finish(cfg, rows, extra)


def _run_mechanics(cfg: Mapping) -> RunResult:
    params = dict(cfg.get("params", {}))
    H = params.pop("H", None)
    if H is None:
        raise ConfigError("euler-b needs params.H")
    consts = params.pop("constants", {})
    if params:
        raise ConfigError(f"unknown euler-b parameters: {sorted(params)}")
    mcfg = cfg["mesh"]
    nt = mcfg.get("nt") if "t" not in mcfg else len(mcfg["t"]) - 1
    dt = float(mcfg.get("ht", 1.0))
    init = cfg.get("initial", {})
    q0, pm = float(init.get("q", 0.0)), float(init.get("p", 0.0))
    rng = np.random.default_rng(cfg["seed"])
    seeds = [tuple(rng.standard_normal(2)) for _ in range(2)]
    integ = EulerB(H, consts)
    run = integ.run(q0, pm, nt, seeds)
    om = run.omega
    scale = float(np.max(np.abs(om))) or 1.0
    rows = []
    for n in range(1, nt + 1):
        # residual of the two defining relations at step n-1
        q, p = run.q, run.p
        r1 = abs(p[n] - p[n - 1] + integ._Hq(n - 1, q[n - 1], p[n]))
        r2 = abs(q[n] - q[n - 1] - integ._Hp(n - 1, q[n - 1], p[n]))
        d = abs(om[n] - om[n - 1]) / scale
        rows.append({"step": n, "time": n * dt, "max_scheme_residual": max(r1, r2),
                     "ms_residual_max": d, "ms_residual_l2": d,
                     "omega_drift": abs(om[n] - om[0]) / scale})
    extra = {
        "mesh": {"nt": nt},
        "explicit_update": integ.explicit,
        "max_det_deviation": float(np.max(np.abs(run.det - 1.0))),
        "seeds": {"run": cfg["seed"], "tangent": cfg["seed"]},
        "normalization": {
            "omega": "omega_n = d1 p_{n-1} d2 q_n - d2 p_{n-1} d1 q_n, relative to max |omega_n|",
        },
    }
    return _finish(cfg, rows, extra)


def write_outputs(result: RunResult, csv_path: str | Path | None, manifest_path: str | Path | None) -> None:
    if csv_path:
        Path(csv_path).write_text(result.csv_text())
    if manifest_path:
        Path(manifest_path).write_text(result.manifest_text())


__all__ = ["COLUMNS", "RunResult", "build_mesh", "config_hash", "load_config", "run_config", "validate",
           "write_outputs", "ConfigError"]
