"""Euler-B steps for discrete mechanics, H(n, q, p) with the step length folded in.

One step maps (q_0, p_{-1}) to (q_1, p_0) through

    p_0 = p_{-1} - dH/dq(q_0, p_0),    q_1 = q_0 + dH/dp(q_0, p_0),

the first relation being implicit in p_0 unless dH/dq does not depend on p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..dsl import parse
from ..expr import BaseCoord, FiberCoord, compile_expr
from ..signature import Signature
from .engine import ConfigError, InstabilityError, SchemeError

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50

SIG = Signature(1, 2, ("q", "p"))
_N, _Q, _P = BaseCoord(0), FiberCoord(0, (0,)), FiberCoord(1, (0,))


class NewtonError(SchemeError):
    def __init__(self, step: int, residual: float):
        super().__init__(f"Newton iteration for p did not converge at step {step}; last residual {residual:.3e}")
        self.step = step
        self.residual = residual


@dataclass
class MechanicsRun:
    q: np.ndarray  # q_0 .. q_N
    p: np.ndarray  # p_{-1} .. p_{N-1}
    tangents: list  # pairs (dq, dp) with the same layout
    det: np.ndarray  # step-Jacobian determinants
    omega: np.ndarray  # omega_n = d1 p_{n-1} d2 q_n - d2 p_{n-1} d1 q_n

    @property
    def omega_drift(self) -> np.ndarray:
        scale = max(float(np.max(np.abs(self.omega))), np.finfo(float).tiny)
        return np.abs(self.omega - self.omega[0]) / scale


class EulerB:
    def __init__(self, H: str, constants: Mapping[str, float] | None = None):
        self.source = H
        self.constants = {k: float(v) for k, v in (constants or {}).items()}
        e = parse(H, SIG) if isinstance(H, str) else H
        if any(any(c.offset) for c in e.fiber_support()):
            raise ConfigError("H must depend on the unshifted q and p only")
        self.H = e
        Hq, Hp = e.diff(_Q), e.diff(_P)
        args = [_N, _Q, _P]
        c = self.constants
        self._Hq = compile_expr(Hq, args, "math", c)
        self._Hp = compile_expr(Hp, args, "math", c)
        self._Hqq = compile_expr(Hq.diff(_Q), args, "math", c)
        self._Hqp = compile_expr(Hq.diff(_P), args, "math", c)
        self._Hpp = compile_expr(Hp.diff(_P), args, "math", c)
        self.explicit = _P not in Hq.fiber_support()

    def step(self, q0: float, pm: float, n: int = 0) -> tuple:
        if self.explicit:
            p0 = pm - self._Hq(n, q0, 0.0)
        else:
            p0 = pm
            r = math.inf
            for _ in range(NEWTON_MAXIT):
                r = p0 - pm + self._Hq(n, q0, p0)
                dp = r / (1.0 + self._Hqp(n, q0, p0))
                p0 -= dp
                if abs(dp) <= NEWTON_TOL * (1.0 + abs(p0)):
                    break
            else:
                raise NewtonError(n, abs(r))
        return q0 + self._Hp(n, q0, p0), p0

    def jacobian(self, q0: float, p0: float, n: int = 0) -> np.ndarray:
        """d(q_1, p_0)/d(q_0, p_{-1}) evaluated at the solved p_0."""
        a = 1.0 + self._Hqp(n, q0, p0)
        Hqq, Hpp, Hpq = self._Hqq(n, q0, p0), self._Hpp(n, q0, p0), self._Hqp(n, q0, p0)
        dp_dq, dp_dpm = -Hqq / a, 1.0 / a
        return np.array([[1.0 + Hpq + Hpp * dp_dq, Hpp * dp_dpm], [dp_dq, dp_dpm]])

    def run(self, q0: float, pm: float, nsteps: int, seeds=((1.0, 0.0), (0.0, 1.0))) -> MechanicsRun:
        if nsteps < 1:
            raise ConfigError("nsteps must be >= 1")
        q = np.empty(nsteps + 1)
        p = np.empty(nsteps + 1)
        det = np.empty(nsteps)
        q[0], p[0] = q0, pm
        tans = [(np.empty(nsteps + 1), np.empty(nsteps + 1)) for _ in seeds]
        for (dq, dp), s in zip(tans, seeds):
            dq[0], dp[0] = s
        for n in range(nsteps):
            qn, pn = self.step(q[n], p[n], n)
            if not (math.isfinite(qn) and math.isfinite(pn)) or max(abs(qn), abs(pn)) > 1e100:
                raise InstabilityError(n, "q" if not math.isfinite(qn) else "p")
            q[n + 1], p[n + 1] = qn, pn
            J = self.jacobian(q[n], pn, n)
            det[n] = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            for dq, dp in tans:
                dq[n + 1] = J[0, 0] * dq[n] + J[0, 1] * dp[n]
                dp[n + 1] = J[1, 0] * dq[n] + J[1, 1] * dp[n]
        if len(tans) >= 2:
            (a1, b1), (a2, b2) = tans[0], tans[1]
            # omega_n pairs p_{n-1} (index n of p) with q_n
            omega = b1 * a2 - b2 * a1
        else:
            omega = np.zeros(nsteps + 1)
        return MechanicsRun(q, p, tans, det, omega)

    def finite_difference_jacobian(self, q0: float, pm: float, n: int = 0, h: float = 1e-6) -> np.ndarray:
        J = np.empty((2, 2))
        for j, (dq, dp) in enumerate(((h, 0.0), (0.0, h))):
            qa, pa = self.step(q0 + dq, pm + dp, n)
            qb, pb = self.step(q0 - dq, pm - dp, n)
            J[:, j] = [(qa - qb) / (2 * h), (pa - pb) / (2 * h)]
        return J
