"""Rectangular tensor-product meshes with per-direction node arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh:
    """Nodes ``x`` (periodic: ``x[-1]`` is the image of ``x[0]``) and time nodes ``t``.

    ``nx = len(x) - 1`` distinct spatial nodes and ``nt = len(t) - 1`` time steps.
    Steps are eps_x[i] = x[i+1] - x[i] and eps_t[j] = t[j+1] - t[j].
    """

    x: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if x.ndim != 1 or t.ndim != 1:
            raise MeshError("node arrays must be one-dimensional")
        if len(x) < 4:
            raise MeshError("need at least 3 spatial cells")
        if len(t) < 2:
            raise MeshError("need at least one time step (nt >= 1)")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(t)):
            raise MeshError("node coordinates must be finite")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(t) <= 0):
            raise MeshError("node coordinates must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    @classmethod
    def uniform(cls, nx: int, nt: int, hx: float, ht: float, x0: float = 0.0, t0: float = 0.0) -> "Mesh":
        if nx < 3 or nt < 1:
            raise MeshError(f"need nx >= 3 and nt >= 1, got nx={nx}, nt={nt}")
        if hx <= 0 or ht <= 0:
            raise MeshError("step sizes must be positive")
        return cls(x0 + hx * np.arange(nx + 1), t0 + ht * np.arange(nt + 1))

    @classmethod
    def jittered_t(cls, nx: int, nt: int, hx: float, ht: float, ratio: float, seed: int) -> "Mesh":
        """Uniform in x; time steps drawn from [ht, ratio*ht] with a seeded generator."""
        if ratio < 1:
            raise MeshError("step ratio must be >= 1")
        rng = np.random.default_rng(seed)
        steps = ht * (1.0 + (ratio - 1.0) * rng.random(nt))
        return cls(hx * np.arange(nx + 1), np.concatenate([[0.0], np.cumsum(steps)]))

    @property
    def nx(self) -> int:
        return len(self.x) - 1

    @property
    def nt(self) -> int:
        return len(self.t) - 1

    @property
    def eps_x(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def eps_t(self) -> np.ndarray:
        return np.diff(self.t)

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    def step_ratio(self) -> tuple:
        ex, et = self.eps_x, self.eps_t
        return float(ex.max() / ex.min()), float(et.max() / et.min())

    def describe(self) -> dict:
        rx, rt = self.step_ratio()
        return {
            "nx": self.nx,
            "nt": self.nt,
            "x_range": [float(self.x[0]), float(self.x[-1])],
            "t_range": [float(self.t[0]), float(self.t[-1])],
            "step_ratio_x": rx,
            "step_ratio_t": rt,
            "uniform": bool(abs(rx - 1.0) < 1e-9 and abs(rt - 1.0) < 1e-9),
        }
