"""Finite-difference minimal-graph solver on log-polar grids.

The graph of ``f`` over a domain with metric ``lam^2 |dz|^2`` is minimal iff

    div(grad f / W) = 0,   W = sqrt(1 + lam^-2 |grad f|^2)

(Euclidean div and grad).  Multiplying by ``W^3`` gives the quasilinear form

    (1 + lam^-2 f_y^2) f_xx + (1 + lam^-2 f_x^2) f_yy - 2 lam^-2 f_x f_y f_xy
        + lam^-2 (f_x^2 + f_y^2) (lam_x/lam f_x + lam_y/lam f_y) = 0.

Because the equation is conformally natural, in ``w = log z`` it keeps the
same shape with ``lam`` replaced by ``Lam = lam(e^sigma) e^sigma``; the
log-polar residual equals ``r^2`` times the (x, y) residual.  The solver
works with the log-polar form, which is better scaled near small radii.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import DiscreteGraph, GraphDomain, SolveInfo
from .errors import ConvergenceError, OutOfDomainError, SolverError
from .geometry import ConformalMetric

log = logging.getLogger(__name__)

__all__ = [
    "mse_residual",
    "residual_field",
    "graph_W",
    "msecoord",
    "log_polar_residual",
    "solve",
    "harmonic_initial",
]


def msecoord(metric: ConformalMetric, z, fx, fy, fxx, fyy, fxy):
    """Left side of the minimal-graph equation in (x, y) coordinates."""
    lam = metric.lam(z)
    lx, ly = metric.log_grad(z)
    il2 = 1.0 / (lam * lam)
    grad2 = fx * fx + fy * fy
    return ((1 + il2 * fy * fy) * fxx + (1 + il2 * fx * fx) * fyy
            - 2 * il2 * fx * fy * fxy + il2 * grad2 * (lx * fx + ly * fy))


def log_polar_residual(metric: ConformalMetric, sigma, a, b, A, B, C):
    """Log-polar residual from the jet (f_s, f_t, f_ss, f_tt, f_st)."""
    Lam = metric.radial_factor(sigma)
    kappa = metric.radial_log_derivative(sigma)
    il2 = 1.0 / (Lam * Lam)
    return ((1 + il2 * b * b) * A + (1 + il2 * a * a) * B - 2 * il2 * a * b * C
            + il2 * (a * a + b * b) * kappa * a)


def _jet_to_xy(r, theta, a, b, A, B, C):
    """Chain rule from (sigma, theta) derivatives to (x, y) derivatives."""
    c, s = np.cos(theta), np.sin(theta)
    r2 = r * r
    fx = (c * a - s * b) / r
    fy = (s * a + c * b) / r
    fxx = (c * c * A - 2 * c * s * C + s * s * B + (s * s - c * c) * a + 2 * c * s * b) / r2
    fyy = (s * s * A + 2 * c * s * C + c * c * B + (c * c - s * s) * a - 2 * c * s * b) / r2
    fxy = (s * c * A + (c * c - s * s) * C - s * c * B - 2 * s * c * a + (s * s - c * c) * b) / r2
    return fx, fy, fxx, fyy, fxy


def _full_stencil_jet(graph: DiscreteGraph):
    """Central-difference jet at every node whose 3x3 stencil is active."""
    f = graph.values
    n, m = f.shape
    hs, ht = graph.h_sigma, graph.h_theta
    if graph.domain.periodic:
        fp = np.concatenate([f[:, -1:], f, f[:, :1]], axis=1)
    else:
        fp = np.concatenate([np.full((n, 1), np.nan), f, np.full((n, 1), np.nan)], axis=1)
    fp = np.concatenate([np.full((1, m + 2), np.nan), fp, np.full((1, m + 2), np.nan)], axis=0)

    def sh(di, dj):
        return fp[1 + di:1 + di + n, 1 + dj:1 + dj + m]

    c = sh(0, 0)
    a = (sh(1, 0) - sh(-1, 0)) / (2 * hs)
    b = (sh(0, 1) - sh(0, -1)) / (2 * ht)
    A = (sh(1, 0) - 2 * c + sh(-1, 0)) / hs ** 2
    B = (sh(0, 1) - 2 * c + sh(0, -1)) / ht ** 2
    C = (sh(1, 1) - sh(-1, 1) - sh(1, -1) + sh(-1, -1)) / (4 * hs * ht)
    return a, b, A, B, C


def residual_field(metric: ConformalMetric, graph: DiscreteGraph):
    """(x, y) residual at every node with a full active 3x3 stencil (NaN elsewhere)."""
    a, b, A, B, C = _full_stencil_jet(graph)
    S, T = graph.mesh
    r = np.exp(S)
    fx, fy, fxx, fyy, fxy = _jet_to_xy(r, T, a, b, A, B, C)
    return msecoord(metric, r * np.exp(1j * T), fx, fy, fxx, fyy, fxy)


def _check_stencil(graph, i, j):
    n, m = graph.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ii, jj = i + di, j + dj
            if graph.domain.periodic:
                jj %= m
            if not (0 <= ii < n and 0 <= jj < m) or not graph.active[ii, jj]:
                raise OutOfDomainError(f"3x3 stencil at node ({i}, {j}) leaves the domain")


def mse_residual(metric: ConformalMetric, graph: DiscreteGraph, i: int, j: int) -> float:
    """Residual of the minimal-graph equation at grid node ``(i, j)``."""
    _check_stencil(graph, i, j)
    return float(residual_field(metric, graph)[i, j])


def graph_W(metric: ConformalMetric, graph: DiscreteGraph, i: int, j: int) -> float:
    """``W = sqrt(1 + |grad_g f|_g^2)`` at node ``(i, j)`` from central differences."""
    _check_stencil(graph, i, j)
    a, b, *_ = _full_stencil_jet(graph)
    Lam = metric.radial_factor(graph.sigma[i])
    return float(np.sqrt(1 + (a[i, j] ** 2 + b[i, j] ** 2) / Lam ** 2))


class _Stencil:
    """Sparse difference operators from active-node values to unknown-node jets."""

    def __init__(self, graph: DiscreteGraph):
        self.graph = graph
        active = graph.active
        n, m = active.shape
        self.index = np.full(active.shape, -1, dtype=int)
        self.index[active] = np.arange(int(active.sum()))
        unknown = active & ~graph.dirichlet_mask
        self.unknown = unknown
        ui, uj = np.nonzero(unknown)
        self.ui, self.uj = ui, uj
        self.col_unknown = self.index[ui, uj]
        periodic = graph.domain.periodic

        def neighbour(di, dj):
            ii_out = np.full(ui.shape, -1)
            jj_out = np.full(ui.shape, -1)
            for a, b in ((di, dj), (di, -dj), (-di, dj), (-di, -dj)):
                ii = ui + a
                jj = uj + b
                if periodic:
                    jj = np.mod(jj, m)
                ok = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < m)
                ok[ok] = active[ii[ok], jj[ok]]
                take = ok & (ii_out < 0)
                ii_out[take] = ii[take]
                jj_out[take] = jj[take]
            if np.any(ii_out < 0):
                raise SolverError("could not resolve a ghost node for a Neumann boundary")
            return self.index[ii_out, jj_out]

        hs, ht = graph.h_sigma, graph.h_theta
        rows = np.arange(len(ui))
        nb = {(di, dj): neighbour(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)}
        shape = (len(ui), int(active.sum()))

        def op(terms):
            r = np.concatenate([rows for _ in terms])
            c = np.concatenate([nb[k] for k, _ in terms])
            v = np.concatenate([np.full(len(ui), w) for _, w in terms])
            return sp.csr_matrix((v, (r, c)), shape=shape)

        self.Da = op([((1, 0), 1 / (2 * hs)), ((-1, 0), -1 / (2 * hs))])
        self.Db = op([((0, 1), 1 / (2 * ht)), ((0, -1), -1 / (2 * ht))])
        self.DA = op([((1, 0), 1 / hs ** 2), ((0, 0), -2 / hs ** 2), ((-1, 0), 1 / hs ** 2)])
        self.DB = op([((0, 1), 1 / ht ** 2), ((0, 0), -2 / ht ** 2), ((0, -1), 1 / ht ** 2)])
        q = 1 / (4 * hs * ht)
        self.DC = op([((1, 1), q), ((-1, 1), -q), ((1, -1), -q), ((-1, -1), q)])
        self.sigma_u = graph.sigma[ui]

    def full_vector(self, values):
        return values[self.graph.active]

    def jets(self, fvec):
        return (self.Da @ fvec, self.Db @ fvec, self.DA @ fvec, self.DB @ fvec, self.DC @ fvec)


def _residual_and_jacobian(metric, st: _Stencil, fvec, want_jac=True):
    a, b, A, B, C = st.jets(fvec)
    sigma = st.sigma_u
    Lam = metric.radial_factor(sigma)
    kappa = metric.radial_log_derivative(sigma)
    il2 = 1.0 / (Lam * Lam)
    F = ((1 + il2 * b * b) * A + (1 + il2 * a * a) * B - 2 * il2 * a * b * C
         + il2 * (a * a + b * b) * kappa * a)
    if not want_jac:
        return F, None
    dA = 1 + il2 * b * b
    dB = 1 + il2 * a * a
    dC = -2 * il2 * a * b
    da = il2 * (2 * a * B - 2 * b * C + kappa * (3 * a * a + b * b))
    db = il2 * (2 * b * A - 2 * a * C + 2 * kappa * a * b)
    J = (sp.diags(da) @ st.Da + sp.diags(db) @ st.Db + sp.diags(dA) @ st.DA
         + sp.diags(dB) @ st.DB + sp.diags(dC) @ st.DC)
    return F, J.tocsc()[:, st.col_unknown]


def _factor(J):
    try:
        lu = spla.splu(J.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"singular Jacobian: {exc}") from exc
    return lu


def harmonic_initial(domain: GraphDomain, n_sigma: int, n_theta: int, pitch: float = 0.0):
    """Discrete harmonic extension of the boundary data (Neumann rims reflect)."""
    g = DiscreteGraph.zeros(domain, n_sigma, n_theta, pitch).with_dirichlet()
    st = _Stencil(g)
    fvec = st.full_vector(g.values)
    L = (st.DA + st.DB).tocsc()
    Lu = L[:, st.col_unknown]
    fvec0 = fvec.copy()
    fvec0[st.col_unknown] = 0.0
    x = _factor(Lu).solve(-(L @ fvec0))
    fvec0[st.col_unknown] = x
    vals = np.full(g.shape, np.nan)
    vals[g.active] = fvec0
    return g.copy_with(vals)


def solve(metric: ConformalMetric, domain: GraphDomain, initial: DiscreteGraph | None = None,
          *, shape: tuple | None = None, tol: float = 1e-10, max_iter: int = 50,
          damping: float = 0.5, pitch: float | None = None) -> DiscreteGraph:
    """Solve the minimal-graph equation by damped Newton iteration.

    Either ``initial`` (whose grid defines the discretisation) or ``shape =
    (n_sigma, n_theta)`` must be given; without ``initial`` the harmonic
    extension of the Dirichlet data is the starting guess.  Dirichlet values
    of ``initial`` are overwritten by the boundary data.

    Convergence is declared when the sup-norm of the log-polar residual over
    unknown nodes is at most ``max(tol, roundoff_floor)``; the floor only
    matters on very fine grids, where second differences of O(1) data carry
    rounding noise of order ``eps / h^2``.  The returned graph carries a
    ``SolveInfo`` with the iteration count, final residual, residual history
    and (for Dirichlet-only problems) the maximum-principle verdict.
    """
    if initial is None:
        if shape is None:
            raise ValueError("give either an initial graph or a grid shape")
        initial = harmonic_initial(domain, *shape, pitch=pitch or 0.0)
    elif initial.domain != domain:
        raise ValueError("initial graph is defined on a different domain")
    g = initial.with_dirichlet()
    if pitch is not None:
        g.pitch = pitch
    st = _Stencil(g)
    fvec = st.full_vector(g.values).astype(float)
    if not np.all(np.isfinite(fvec)):
        raise ValueError("initial graph has non-finite values on active nodes")

    F, J = _residual_and_jacobian(metric, st, fvec)
    res = float(np.max(np.abs(F))) if F.size else 0.0
    history = [res]
    it = 0
    floor = roundoff_floor(g, np.max(np.abs(fvec)))
    target = max(tol, floor)
    while res > target:
        if it >= max_iter:
            raise ConvergenceError(
                f"Newton did not converge in {max_iter} iterations (residual {res:.3e})",
                last_residual=res, iterations=it)
        delta = _factor(J).solve(-F)
        if not np.all(np.isfinite(delta)):
            raise SolverError("Newton step is not finite (singular Jacobian)")
        alpha = 1.0
        while True:
            trial = fvec.copy()
            trial[st.col_unknown] += alpha * delta
            Ft, _ = _residual_and_jacobian(metric, st, trial, want_jac=False)
            rt = float(np.max(np.abs(Ft)))
            if np.isfinite(rt) and (rt <= (1 - 1e-4 * alpha) * res or alpha < 1e-3):
                break
            alpha *= damping
        fvec = trial
        it += 1
        F, J = _residual_and_jacobian(metric, st, fvec)
        res = float(np.max(np.abs(F)))
        history.append(res)
        log.debug("newton iter %d: residual %.3e (step %.3g)", it, res, alpha)

    vals = np.full(g.shape, np.nan)
    vals[g.active] = fvec
    info = SolveInfo(iterations=it, residual=res, history=history, tolerance=target)
    out = g.copy_with(vals, info)
    if domain.dirichlet_only:
        info.max_principle_ok = _max_principle_ok(out)
        if not info.max_principle_ok:
            log.warning("solved graph violates the discrete maximum principle")
    return out


def roundoff_floor(graph: DiscreteGraph, scale: float) -> float:
    """Residual level below which second differences are dominated by rounding."""
    eps = np.finfo(float).eps
    return 16.0 * eps * (1.0 + float(scale)) * (2.0 / graph.h_sigma ** 2 + 2.0 / graph.h_theta ** 2)


def _max_principle_ok(graph: DiscreteGraph, slack: float = 1e-9) -> bool:
    v = graph.values
    bd = v[graph.boundary_mask & graph.active]
    allv = v[graph.active]
    scale = slack * (1.0 + float(np.max(np.abs(allv))))
    return bool(allv.max() <= bd.max() + scale and allv.min() >= bd.min() - scale)


def consistency_ratios(residuals):
    """Successive ratios ``res[k] / res[k+1]`` for a refinement sequence."""
    residuals = list(residuals)
    return [residuals[k] / residuals[k + 1] for k in range(len(residuals) - 1)]


def max_interior_residual(metric: ConformalMetric, graph: DiscreteGraph, margin: float = 0.0):
    """Max |(x, y) residual| over nodes with a full stencil.

    ``margin`` (in sigma/theta units) drops nodes that close to the outer
    rectangle, so a fixed physical region is compared across refinements.
    """
    R = residual_field(metric, graph)
    S, T = graph.mesh
    s0, s1 = graph.domain.sigma_range
    t0, t1 = graph.domain.theta_range
    mask = np.isfinite(R) & (S >= s0 + margin - 1e-12) & (S <= s1 - margin + 1e-12)
    if not graph.domain.periodic:
        mask &= (T >= t0 + margin - 1e-12) & (T <= t1 - margin + 1e-12)
    return float(np.max(np.abs(R[mask])))


