"""Checkers for the quantitative inequalities satisfied by minimal graphs.

Every checker returns a plain report dictionary holding both sides of the
inequality together with its verdict.  Reports also record the discretisation
slack that was allowed, alongside per-hypothesis diagnostics.  Discrete graphs live on log-polar grids, so
Euclidean quantities use ``dx dy = r^2 dsigma dtheta`` and
``|grad f|^2 = (f_sigma^2 + f_theta^2) / r^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .barriers import delta as barrier_delta
from .domain import DiscreteGraph
from .errors import DomainError, HypothesisError, ParameterError
from .flux import circle, vertical_flux
from .geometry import FLAT, ConformalMetric

__all__ = [
    "height_bound",
    "HeightInstance",
    "height_bound_check",
    "energy_check",
    "good_circle",
    "good_circle_bound",
    "area_bound_check",
    "boundary_distance",
    "schauder_probe",
    "laplacian_decay_probe",
]

SLACK_CELLS = 3.0


def height_bound(phi: float, r1: float, r2: float) -> float:
    """``(sqrt 2 / pi) phi log(r2 / r1)``."""
    if not 0 < r1 < r2:
        raise ParameterError("need 0 < r1 < r2")
    return math.sqrt(2.0) / math.pi * phi * math.log(r2 / r1)


def good_circle_bound(phi: float, r1: float, r2: float, r1p: float, r2p: float) -> float:
    """``sqrt 8 phi (log(r2/r1))^(1/2) (log(r2'/r1'))^(-1/2)``."""
    if not 0 < r1p < r2p:
        raise ParameterError("need 0 < r1' < r2'")
    return math.sqrt(8.0) * phi * math.sqrt(math.log(r2 / r1)) / math.sqrt(math.log(r2p / r1p))


@dataclass
class HeightInstance:
    """A graph on an annular log-polar domain with the height-estimate data.

    The outer circle ``sigma = sigma_max`` plays the role of the outer
    boundary, the inner circle ``sigma = sigma_min`` the first inner boundary
    and every hole a further inner boundary.  ``phi=None`` measures the
    vertical flux on a circle just inside the outer boundary.
    """

    graph: DiscreteGraph
    r1: float
    r2: float
    h: float
    phi: Optional[float] = None
    metric: ConformalMetric = FLAT
    hypotheses: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ParameterError("need 0 < r1 < r2")
        if not self.h > 0:
            raise ParameterError("the drop h must be positive")
        if not self.graph.domain.periodic:
            raise ParameterError("height instances live on periodic annular domains")


def _slack(graph, magnitude, width=None):
    """Discretisation allowance: three cell widths times a local magnitude."""
    if width is None:
        width = max(graph.h_sigma, graph.h_theta)
    return SLACK_CELLS * width * magnitude


def _check_hypotheses(inst: HeightInstance, tol: float = 1e-9):
    g = inst.graph
    f = g.values
    S, _ = g.mesh
    r = np.exp(S)
    gs, gt = g.node_gradient()
    grad = np.sqrt(gs ** 2 + gt ** 2) / r
    lam = inst.metric.lam(g.z)
    diag = {}

    def record(name, ok, detail):
        diag[name] = {"ok": bool(ok), **detail}

    sig0, sig1 = g.domain.sigma_range
    record("enclosing_radii", inst.r1 <= math.exp(sig0) * (1 + 1e-12)
           and math.exp(sig1) <= inst.r2 * (1 + 1e-12),
           {"inner": math.exp(sig0), "outer": math.exp(sig1)})
    outer = g.segment_mask("sigma_max")
    dev = float(np.max(np.abs(f[outer])))
    record("outer_zero", dev <= tol, {"max_deviation": dev})
    inner = g.segment_mask("sigma_min")
    dev = float(np.max(np.abs(f[inner] + inst.h)))
    record("inner_drop", dev <= tol, {"max_deviation": dev})
    ok, worst = True, 0.0
    for k in range(len(g.domain.holes)):
        vals = f[g.segment_mask(f"hole{k}")]
        spread = float(np.max(vals) - np.min(vals))
        level = float(np.mean(vals))
        ok &= spread <= tol and -2 * inst.h - tol <= level <= tol
        worst = max(worst, spread)
    record("hole_levels", ok, {"max_spread": worst})
    # outward normal of the domain on sigma_min points to decreasing sigma
    dnu = -gs[inner] / r[inner]
    slack = _slack(g, float(np.max(grad[inner])), g.h_sigma)
    worst = float(np.max(dnu))
    for k, hole in enumerate(g.domain.holes):
        m = g.segment_mask(f"hole{k}")
        nd = _hole_normal_derivative(g, hole, m, gs, gt, r)
        if nd.size:
            worst = max(worst, float(np.max(nd)))
            slack = max(slack, _slack(g, float(np.max(grad[m])), g.h_sigma))
    record("normal_derivative", worst <= slack, {"max": worst, "slack": slack})
    gnorm = grad / lam
    mx = float(np.nanmax(np.where(g.active, gnorm, np.nan)))
    slack = _slack(g, mx, g.h_sigma)
    record("gradient_bound", mx <= 1.0 + slack, {"max": mx, "slack": slack})
    return diag


def _hole_normal_derivative(g, hole, mask, gs, gt, r):
    """Derivative along the normal pointing into the hole at its boundary nodes."""
    S, T = g.mesh
    out = []
    (s0, s1), (t0, t1) = hole.sigma, hole.theta
    tol_s, tol_t = 0.5 * g.h_sigma, 0.5 * g.h_theta
    for idx in zip(*np.nonzero(mask)):
        s, t = S[idx], T[idx]
        if abs(s - s0) < tol_s:
            out.append(gs[idx] / r[idx])
        if abs(s - s1) < tol_s:
            out.append(-gs[idx] / r[idx])
        if abs(t - t0) < tol_t:
            out.append(gt[idx] / r[idx])
        if abs(t - t1) < tol_t:
            out.append(-gt[idx] / r[idx])
    return np.array(out)


def energy_check(graph: DiscreteGraph, h: float, phi: float) -> dict:
    """``iint rho^2 dx dy <= 2 sqrt 2 h phi`` with rho = |grad f| on the domain, 0 outside."""
    ds, dt = graph.cell_gradients()
    cells = np.nan_to_num(ds ** 2 + dt ** 2, nan=0.0)  # zero extension over holes
    lhs = float(np.sum(cells) * graph.h_sigma * graph.h_theta)
    rhs = 2.0 * math.sqrt(2.0) * h * phi
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}


def height_bound_check(inst: HeightInstance, *, raise_on_failure: bool = True) -> dict:
    """Verify the hypotheses, then compare the drop with the height bound.

    Raises
    ------
    HypothesisError
        A hypothesis fails numerically; ``err.item`` names it.
    """
    diag = _check_hypotheses(inst)
    failed = [k for k, v in diag.items() if not v["ok"]]
    if failed and raise_on_failure:
        raise HypothesisError(f"height-estimate hypothesis failed: {failed[0]}", failed[0])
    phi = inst.phi
    if phi is None:
        g = inst.graph
        radius = math.exp(g.domain.sigma_range[1] - 1.5 * g.h_sigma)
        phi = vertical_flux(g, circle(0, radius), inst.metric, n=4 * len(g.theta)).value
    bound = height_bound(phi, inst.r1, inst.r2)
    report = {
        "h": inst.h,
        "phi": phi,
        "bound": bound,
        "holds": inst.h <= bound,
        "hypotheses": diag,
        "energy": energy_check(inst.graph, inst.h, phi),
    }
    inst.hypotheses = diag
    return report


def good_circle(graph: DiscreteGraph, p: complex, r1p: float, r2p: float, phi: float,
                r1: float, r2: float, *, p_argument: float | None = None,
                n_radii: int = 256, n_points: int = 512) -> dict:
    """Radius in ``[r1', r2']`` minimising ``int_{C(p, r)} |df|`` over a log sweep.

    ``|df|`` is extended by zero outside the domain.  Circles enclosing the
    origin need a periodic domain.
    """
    if not 0 < r1p < r2p:
        raise ParameterError("need 0 < r1' < r2'")
    p = complex(p)
    rmax = math.exp(graph.domain.sigma_range[1])
    if abs(p) + r2p > rmax * (1 + 1e-12):
        raise DomainError("annulus leaves the gridded region")
    encloses = abs(p) <= r2p
    if encloses and not graph.domain.periodic:
        raise DomainError("circles around the origin need a periodic domain")
    if p_argument is None:
        p_argument = float(np.angle(p)) if p != 0 else 0.0
    radii = np.exp(np.linspace(math.log(r1p), math.log(r2p), n_radii))
    phis = 2 * np.pi * np.arange(n_points) / n_points
    values = np.empty(n_radii)
    for k, r in enumerate(radii):
        w = p + r * np.exp(1j * phis)
        if graph.domain.periodic:
            arg = np.angle(w)
        else:
            arg = p_argument + np.angle(w / p)
        fx, fy = graph.gradient(w, arg, outside="cell")
        values[k] = float(np.mean(np.hypot(fx, fy))) * 2 * np.pi * r
    k = int(np.argmin(values))
    bound = good_circle_bound(phi, r1, r2, r1p, r2p)
    return {"r": float(radii[k]), "line_integral": float(values[k]), "bound": bound,
            "holds": bool(values[k] <= bound)}


def _edges(domain):
    """Boundary edges as ('arc', r, phi0, phi1) or ('ray', phi, rho0, rho1)."""
    (s0, s1), (t0, t1) = domain.sigma_range, domain.theta_range
    e = [("arc", math.exp(s0), t0, t1), ("arc", math.exp(s1), t0, t1)]
    if not domain.periodic:
        e += [("ray", t0, math.exp(s0), math.exp(s1)), ("ray", t1, math.exp(s0), math.exp(s1))]
    for hole in domain.holes:
        (a0, a1), (b0, b1) = hole.sigma, hole.theta
        e += [("arc", math.exp(a0), b0, b1), ("arc", math.exp(a1), b0, b1),
              ("ray", b0, math.exp(a0), math.exp(a1)), ("ray", b1, math.exp(a0), math.exp(a1))]
    return e


def _cover_dist(r, th, r0, phi, periodic):
    d = th - phi
    if periodic:
        d = np.mod(d + np.pi, 2 * np.pi) - np.pi
    near = np.abs(d) <= np.pi
    chord = np.sqrt(np.maximum(r * r + r0 * r0 - 2 * r * r0 * np.cos(d), 0.0))
    return np.where(near, chord, r + r0)


def boundary_distance(graph: DiscreteGraph) -> np.ndarray:
    """Euclidean distance from every node to the domain boundary, measured on the cover.

    Angular offsets are not reduced modulo 2 pi on non-periodic domains;
    points more than pi apart in argument are separated by the origin.
    """
    S, T = graph.mesh
    r = np.exp(S)
    periodic = graph.domain.periodic
    out = np.full(r.shape, np.inf)
    for kind, a, b, c in _edges(graph.domain):
        if kind == "arc":
            r0, p0, p1 = a, b, c
            if periodic and p1 - p0 >= graph.domain.period - 1e-12:
                inside = np.ones(r.shape, dtype=bool)
            else:
                inside = (T >= p0) & (T <= p1)
            ends = np.minimum(_cover_dist(r, T, r0, p0, periodic),
                              _cover_dist(r, T, r0, p1, periodic))
            dist = np.where(inside, np.abs(r - r0), ends)
        else:
            phi, q0, q1 = a, b, c
            d = T - phi
            if periodic:
                d = np.mod(d + np.pi, 2 * np.pi) - np.pi
            foot = r * np.cos(d)
            perp = (np.abs(d) < np.pi / 2) & (foot >= q0) & (foot <= q1)
            ends = np.minimum(_cover_dist(r, T, q0, phi, periodic),
                              _cover_dist(r, T, q1, phi, periodic))
            dist = np.where(perp, np.abs(r * np.sin(d)), ends)
        out = np.minimum(out, dist)
    return out


def _euclid_laplacian(graph: DiscreteGraph) -> np.ndarray:
    """Five-point Euclidean Laplacian ``(f_ss + f_tt) / r^2`` at interior nodes (NaN elsewhere)."""
    f = graph.values
    hs, ht = graph.h_sigma, graph.h_theta
    out = np.full(f.shape, np.nan)
    if graph.domain.periodic:
        fp, fm = np.roll(f, -1, axis=1), np.roll(f, 1, axis=1)
        ftt = (fp - 2 * f + fm) / ht ** 2
        fss = np.full(f.shape, np.nan)
        fss[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / hs ** 2
    else:
        fss = np.full(f.shape, np.nan)
        ftt = np.full(f.shape, np.nan)
        fss[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / hs ** 2
        ftt[:, 1:-1] = (f[:, 2:] - 2 * f[:, 1:-1] + f[:, :-2]) / ht ** 2
    S, _ = graph.mesh
    out = (fss + ftt) / np.exp(2 * S)
    out[graph.boundary_mask | ~graph.active] = np.nan
    return out


def schauder_probe(graph: DiscreteGraph, t: float | None = None) -> dict:
    """Empirical interior-estimate constants ``sup d |grad f| / t`` and ``sup d^4 |Lap f| / t^3``.

    Only interior nodes at distance ``d >= t`` from the boundary are used.
    ``t`` defaults to ``sup |f|``.
    """
    f = graph.values
    sup = float(np.nanmax(np.abs(f)))
    if t is None:
        t = sup
    if sup > t * (1 + 1e-12):
        raise ParameterError("the probe needs sup |f| <= t")
    d = boundary_distance(graph)
    lap = _euclid_laplacian(graph)
    gs, gt = graph.node_gradient()
    S, _ = graph.mesh
    grad = np.sqrt(gs ** 2 + gt ** 2) / np.exp(S)
    use = graph.active & ~graph.boundary_mask & (d >= t) & ~np.isnan(lap)
    if t == 0 or not np.any(use):
        return {"t": t, "gradient_constant": 0.0, "laplacian_constant": 0.0,
                "samples": int(np.sum(use))}
    cg = float(np.max(d[use] * grad[use])) / t
    cl = float(np.max(d[use] ** 4 * np.abs(lap[use]))) / t ** 3
    return {"t": t, "gradient_constant": cg, "laplacian_constant": cl, "samples": int(np.sum(use))}


def laplacian_decay_probe(graph: DiscreteGraph, poles, t: float, *, min_delta: float = 0.0) -> dict:
    """``sup |Lap f| delta^4 / t^3`` over interior nodes, delta the pole distance function."""
    lap = _euclid_laplacian(graph)
    S, T = graph.mesh
    dl = np.asarray(barrier_delta((np.exp(S), T), poles))
    use = ~np.isnan(lap) & (dl >= min_delta)
    vals = np.abs(lap[use]) * dl[use] ** 4 / t ** 3
    return {"constant": float(np.max(vals)) if vals.size else 0.0, "samples": int(vals.size)}


def area_bound_check(graph: DiscreteGraph, a: float, b: float, alpha: float, beta: float,
                     metric: ConformalMetric = FLAT) -> dict:
    """Area of the graph inside a height slab and an argument wedge versus the flux bound.

    The bound is ``(b - a) int |v_z . nu| + (beta - alpha) int |v_theta . nu|``
    over the lifted domain boundary where ``f > a`` (respectively
    ``theta > alpha``).  The area integrand ``W lam^2`` is integrated by the
    cell-midpoint rule with the slab indicator taken at cell centres.
    """
    if b < a or beta < alpha:
        raise ParameterError("slab bounds must satisfy a <= b and alpha <= beta")
    dom = graph.domain
    if dom.periodic:
        raise ParameterError("the wedge bound needs a single-valued argument (non-periodic domain)")
    t0, t1 = dom.theta_range
    if beta <= t0 or alpha >= t1:
        raise ParameterError("the argument wedge misses the domain")
    hs, ht = graph.h_sigma, graph.h_theta
    f = graph.values
    fc = 0.25 * (f[:-1, :-1] + f[1:, :-1] + f[:-1, 1:] + f[1:, 1:])
    sc = 0.5 * (graph.sigma[:-1] + graph.sigma[1:])
    tc = 0.5 * (graph.theta[:-1] + graph.theta[1:])
    SC, TC = np.meshgrid(sc, tc, indexing="ij")
    ds, dt = graph.cell_gradients()
    r = np.exp(SC)
    lam = metric.lam(r * np.exp(1j * TC))
    grad2 = (ds ** 2 + dt ** 2) / r ** 2
    W = np.sqrt(1 + grad2 / lam ** 2)
    integrand = W * lam ** 2 * r ** 2
    inside = (~np.isnan(fc)) & (fc >= a) & (fc <= b) & (TC >= alpha) & (TC <= beta)
    area = float(np.sum(np.where(inside, integrand, 0.0)) * hs * ht)
    if not np.any(~np.isnan(fc)):
        raise ParameterError("the graph has no active cells")
    zterm, tterm = _boundary_terms(graph, metric, a, alpha)
    rhs = (b - a) * zterm + (beta - alpha) * tterm
    extent = max(dom.sigma_range[1] - dom.sigma_range[0], t1 - t0)
    slack = _slack(graph, float(np.nanmax(integrand))) * extent
    return {"area": area, "rhs": rhs, "z_term": zterm, "theta_term": tterm,
            "slack": slack, "holds": area <= rhs + slack}


def _boundary_terms(graph, metric, a, alpha):
    """Boundary integrals of |v_z . mu| and |v_theta . mu| along every domain edge."""
    gs, gt = graph.node_gradient()
    S, T = graph.mesh
    z = np.exp(S + 1j * T)
    r = np.abs(z)
    lam = metric.lam(z)
    c, s = np.cos(T), np.sin(T)
    fx = (c * gs - s * gt) / r
    fy = (s * gs + c * gt) / r
    W = np.sqrt(1 + (fx ** 2 + fy ** 2) / lam ** 2)
    f = graph.values
    zsum = tsum = 0.0
    for name in graph.domain.segments:
        for path, direction, step in _edge_paths(graph, name):
            zz = z[path]
            vel = zz * direction  # dz per unit of the log-polar parameter
            X, Y = vel.real, vel.imag
            gx, gy, ww, ll = fx[path], fy[path], W[path], lam[path]
            P = X * gx + Y * gy
            il2 = 1.0 / ll ** 2
            hx = (Y + il2 * gy * P) / ww
            hy = (-X - il2 * gx * P) / ww
            vz = np.abs((-gy * X + gx * Y) / ww)
            vt_field = 1j * zz
            vt = np.abs(ll ** 2 * (vt_field.real * hx + vt_field.imag * hy))
            wts = np.full(len(zz), step)
            wts[0] = wts[-1] = 0.5 * step
            zsum += float(np.sum(np.where(f[path] > a, vz, 0.0) * wts))
            tsum += float(np.sum(np.where(T[path] > alpha, vt, 0.0) * wts))
    return zsum, tsum


def _edge_paths(graph, name):
    """Node index paths along a boundary segment with the log-polar tangent direction."""
    dom = graph.domain
    n_s, n_t = graph.shape
    if name == "sigma_min":
        return [((np.zeros(n_t, int), np.arange(n_t)), 1j, graph.h_theta)]
    if name == "sigma_max":
        return [((np.full(n_t, n_s - 1), np.arange(n_t)), 1j, graph.h_theta)]
    if name == "theta_min":
        return [((np.arange(n_s), np.zeros(n_s, int)), 1.0, graph.h_sigma)]
    if name == "theta_max":
        return [((np.arange(n_s), np.full(n_s, n_t - 1)), 1.0, graph.h_sigma)]
    k = int(name[4:])
    hole = dom.holes[k]
    i0 = int(round((hole.sigma[0] - graph.sigma[0]) / graph.h_sigma))
    i1 = int(round((hole.sigma[1] - graph.sigma[0]) / graph.h_sigma))
    j0 = int(round((hole.theta[0] - graph.theta[0]) / graph.h_theta))
    j1 = int(round((hole.theta[1] - graph.theta[0]) / graph.h_theta))
    js = np.arange(j0, j1 + 1) % n_t if dom.periodic else np.arange(j0, j1 + 1)
    ii = np.arange(i0, i1 + 1)
    return [
        ((np.full(js.size, i0), js), 1j, graph.h_theta),
        ((np.full(js.size, i1), js), 1j, graph.h_theta),
        ((ii, np.full(ii.size, js[0])), 1.0, graph.h_sigma),
        ((ii, np.full(ii.size, js[-1])), 1.0, graph.h_sigma),
    ]
