"""Force balance of catenoidal necks on the positive imaginary axis.

Necks sit at heights ``0 < y_1 < ... < y_N`` with masses ``c_i > 0``.  The
masses stand in for the rescaled vertical fluxes of the necks and are treated
as free positive parameters.  Each neck feels a self force towards ``y = 1``
and a pairwise attraction

    f(x, y) = -2 pi^2 / ((log x - log y) |log x - log y + i pi|^2),

which is antisymmetric and positive when ``x < y``.  The net force on the
lowest neck is positive unless ``N = 1`` and ``y_1 = 1``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, PoleError

log = logging.getLogger(__name__)

__all__ = [
    "NeckConfiguration",
    "pairwise_kernel",
    "net_force",
    "all_forces",
    "EquilibriumResult",
    "find_equilibrium",
    "ScanReport",
    "positivity_scan",
]


@dataclass(frozen=True)
class NeckConfiguration:
    """Ordered neck heights and masses."""

    y: tuple
    c: tuple

    def __post_init__(self):
        y = tuple(float(v) for v in self.y)
        c = tuple(float(v) for v in self.c)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "c", c)
        if len(y) == 0 or len(y) != len(c):
            raise ParameterError("need N >= 1 heights and as many masses")
        if any(v <= 0 or not math.isfinite(v) for v in y):
            raise ParameterError("heights must be positive and finite")
        if any(v <= 0 or not math.isfinite(v) for v in c):
            raise ParameterError("masses must be positive and finite")
        if any(b <= a for a, b in zip(y, y[1:])):
            raise ParameterError("heights must be strictly increasing")

    @property
    def N(self) -> int:
        return len(self.y)

    def inverted(self) -> "NeckConfiguration":
        """Image under ``y_i -> 1 / y_{N+1-i}``, ``c_i -> c_{N+1-i}``."""
        return NeckConfiguration(tuple(1.0 / v for v in reversed(self.y)), tuple(reversed(self.c)))

    def as_dict(self):
        return {"y": list(self.y), "c": list(self.c)}


def pairwise_kernel(x, y):
    """``f(x, y) = -2 pi^2 / (d (d^2 + pi^2))`` with ``d = log x - log y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterError("kernel arguments must be positive")
    d = np.log(x) - np.log(y)
    if np.any(d == 0):
        raise PoleError("kernel is singular at x == y")
    out = -2.0 * math.pi ** 2 / (d * (d * d + math.pi ** 2))
    return float(out) if out.ndim == 0 else out


def _self_force(y, c):
    return c * c * (1.0 - y * y) / (1.0 + y * y)


def net_force(config: NeckConfiguration, i: int) -> float:
    """Net force ``F_i`` on neck ``i`` (0-based index)."""
    if not 0 <= i < config.N:
        raise IndexError(f"neck index {i} out of range for N={config.N}")
    y, c = config.y, config.c
    out = _self_force(y[i], c[i])
    for j in range(config.N):
        if j != i:
            out += c[i] * c[j] * pairwise_kernel(y[i], y[j])
    return float(out)


def all_forces(config: NeckConfiguration) -> np.ndarray:
    return np.array([net_force(config, i) for i in range(config.N)])


def _forces_log(x, c):
    y = np.exp(x)
    if np.any(np.diff(y) <= 0):
        return None
    return all_forces(NeckConfiguration(tuple(y), tuple(c)))


@dataclass
class EquilibriumResult:
    """Outcome of the equilibrium search.

    On failure ``config`` is the last admissible iterate and ``F1_history``
    records the force on the lowest neck at every iterate.
    """

    converged: bool
    config: NeckConfiguration
    forces: list
    iterations: int
    F1_history: list = field(default_factory=list)
    projections: int = 0
    reason: str = ""

    @property
    def min_index_force(self) -> float:
        return self.forces[0]

    def as_dict(self):
        d = asdict(self)
        d["config"] = self.config.as_dict()
        d["min_index_force"] = self.min_index_force
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _project(x, gap):
    """Closest-below ordering fix: enforce ``x_{i+1} >= x_i + gap`` from the left."""
    x = x.copy()
    for i in range(1, x.size):
        x[i] = max(x[i], x[i - 1] + gap)
    return x


def find_equilibrium(N: int, initial: NeckConfiguration, tol: float = 1e-10, *,
                     max_iter: int = 100, max_projections: int = 5,
                     fd_step: float = 1e-7) -> EquilibriumResult:
    """Newton search for ``F_i = 0`` in the log heights, masses held fixed.

    The Jacobian is a central difference.  Steps are clipped to unit length in
    log height and halved until the force norm decreases.  An iterate that
    breaks the ordering is projected back onto the admissible cone; after
    ``max_projections`` projections the search gives up.
    """
    if initial.N != N:
        raise ParameterError(f"initial configuration has {initial.N} necks, expected {N}")
    c = np.array(initial.c)
    x = np.log(np.array(initial.y))
    F = _forces_log(x, c)
    history = [float(F[0])]
    projections = 0
    for it in range(1, max_iter + 1):
        J = np.empty((N, N))
        for k in range(N):
            e = np.zeros(N)
            e[k] = fd_step
            Fp, Fm = _forces_log(x + e, c), _forces_log(x - e, c)
            if Fp is None or Fm is None:
                return _fail(x, c, it, history, projections, "Jacobian stencil left the cone")
            J[:, k] = (Fp - Fm) / (2 * fd_step)
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        norm = np.max(np.abs(dx))
        if norm > 1.0:
            dx /= norm
        step, accepted = 1.0, None
        while step >= 1.0 / 1024:
            trial = x + step * dx
            Ft = _forces_log(trial, c)
            if Ft is None:
                projections += 1
                if projections > max_projections:
                    return _fail(x, c, it, history, projections, "iterates keep leaving the cone")
                trial = _project(trial, 1e-6)
                Ft = _forces_log(trial, c)
            if np.linalg.norm(Ft) < np.linalg.norm(F):
                accepted = (trial, Ft)
                break
            step *= 0.5
        if accepted is None:
            trial = x + step * dx
            Ft = _forces_log(trial, c)
            if Ft is None:
                trial = _project(trial, 1e-6)
                Ft = _forces_log(trial, c)
            accepted = (trial, Ft)
        x, F = accepted
        history.append(float(F[0]))
        if np.max(np.abs(x)) > 30.0:
            return _fail(x, c, it, history, projections, "necks escaped towards 0 or infinity")
        if np.max(np.abs(F)) <= tol:
            cfg = NeckConfiguration(tuple(np.exp(x)), tuple(c))
            return EquilibriumResult(True, cfg, F.tolist(), it, history, projections)
    return _fail(x, c, max_iter, history, projections, "iteration limit reached")


def _fail(x, c, it, history, projections, reason):
    cfg = NeckConfiguration(tuple(np.exp(x)), tuple(c))
    log.info("equilibrium search failed: %s", reason)
    return EquilibriumResult(False, cfg, all_forces(cfg).tolist(), it, history, projections, reason)


@dataclass
class ScanReport:
    N: int
    n_samples: int
    seed: int
    min_F1: float
    argmin: NeckConfiguration
    nonpositive: int

    def as_dict(self):
        d = asdict(self)
        d["argmin"] = self.argmin.as_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _F1_batch(Y, C):
    """Force on the lowest neck for each row of ``Y`` (heights) and ``C`` (masses)."""
    out = _self_force(Y[:, 0], C[:, 0])
    for j in range(1, Y.shape[1]):
        out = out + C[:, 0] * C[:, j] * pairwise_kernel(Y[:, 0], Y[:, j])
    return out


def positivity_scan(N: int, n_samples: int = 10_000, seed: int = 0, *,
                    y_min: float = 1e-3, ratio_max: float = 1e3,
                    mass_range: Sequence[float] = (0.1, 10.0),
                    include_boundary: bool = False) -> ScanReport:
    """Minimum of ``F_1`` over random admissible configurations.

    ``y_1`` is log-uniform on ``[y_min, 1)``, the remaining heights are
    log-uniform above ``y_1`` up to ``ratio_max * y_1`` and sorted, masses are
    log-uniform on ``mass_range``.  For ``N = 1`` with ``include_boundary``
    the equatorial configuration ``y_1 = 1`` is added.
    """
    if N < 1:
        raise ParameterError("N must be positive")
    if n_samples < 1:
        raise ParameterError("the scan needs at least one sample")
    rng = np.random.default_rng(seed)
    ly1 = rng.uniform(math.log(y_min), 0.0, size=n_samples)
    rest = np.sort(rng.uniform(0.0, math.log(ratio_max), size=(n_samples, N - 1)), axis=1)
    LY = np.concatenate([ly1[:, None], ly1[:, None] + rest], axis=1)
    lc = rng.uniform(math.log(mass_range[0]), math.log(mass_range[1]), size=(n_samples, N))
    Y, C = np.exp(LY), np.exp(lc)
    keep = np.all(np.diff(Y, axis=1) > 0, axis=1) & (Y[:, 0] < 1.0)
    Y, C = Y[keep], C[keep]
    if include_boundary and N == 1:
        Y = np.vstack([Y, [[1.0]]])
        C = np.vstack([C, [[1.0]]])
    if Y.shape[0] == 0:
        raise ParameterError("no admissible samples were drawn")
    F1 = _F1_batch(Y, C)
    k = int(np.argmin(F1))
    cfg = NeckConfiguration(tuple(Y[k]), tuple(C[k]))
    return ScanReport(N, int(Y.shape[0]), int(seed), float(F1[k]), cfg, int(np.sum(F1 <= 0)))
