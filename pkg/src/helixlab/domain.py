"""Log-polar graph domains and gridded graphs.

The computational plane is ``w = sigma + i theta`` with ``z = exp(w)``, so the
universal cover of C* becomes a strip and slit/punctured domains become
rectangles with rectangular holes.  Excluded disks are modelled by their
bounding rectangles in (sigma, theta).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Union

import numpy as np

from .errors import DomainError, OutOfDomainError, ParameterError

__all__ = [
    "Dirichlet",
    "NeumannZero",
    "Hole",
    "GraphDomain",
    "DiscreteGraph",
    "OUTER_SEGMENTS",
]

OUTER_SEGMENTS = ("sigma_min", "sigma_max", "theta_min", "theta_max")


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed values; ``value`` is a constant or ``fn(sigma, theta)``."""

    value: Union[float, Callable] = 0.0
    label: str = ""

    def evaluate(self, sigma, theta):
        sigma = np.asarray(sigma, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if callable(self.value):
            return np.broadcast_to(np.asarray(self.value(sigma, theta), dtype=float), sigma.shape)
        return np.full(sigma.shape, float(self.value))


@dataclass(frozen=True)
class NeumannZero:
    """Homogeneous Neumann condition (reflection across the segment)."""

    label: str = "neumann"


BoundaryCondition = Union[Dirichlet, NeumannZero]


@dataclass(frozen=True)
class Hole:
    """Axis-aligned excluded rectangle ``sigma in [s0, s1], theta in [t0, t1]``."""

    sigma: tuple
    theta: tuple

    def __post_init__(self):
        s0, s1 = self.sigma
        t0, t1 = self.theta
        if not (s0 < s1 and t0 < t1):
            raise DomainError(f"degenerate hole {self.sigma} x {self.theta}")

    @classmethod
    def around(cls, z: complex, radius: float, argument: float | None = None):
        """Bounding (sigma, theta) rectangle of the Euclidean disk D(z, radius)."""
        r = abs(z)
        if not 0 < radius < r:
            raise DomainError("disk must avoid the origin")
        arg = float(np.angle(z)) if argument is None else argument
        half = math.asin(radius / r)
        return cls((math.log(r - radius), math.log(r + radius)), (arg - half, arg + half))


@dataclass(frozen=True)
class GraphDomain:
    """Rectangle in (sigma, theta) minus holes, with tagged boundary conditions.

    ``boundary`` maps segment names to conditions: ``sigma_min``,
    ``sigma_max``, ``theta_min``, ``theta_max`` (the latter two absent when
    ``periodic``) and ``hole0``, ``hole1``, ... for the hole rims.  For a
    periodic domain the period is ``theta_range[1] - theta_range[0]``.
    """

    sigma_range: tuple
    theta_range: tuple
    boundary: Mapping[str, BoundaryCondition]
    holes: tuple = ()
    periodic: bool = False

    def __post_init__(self):
        s0, s1 = self.sigma_range
        t0, t1 = self.theta_range
        if not (s0 < s1 and t0 < t1):
            raise DomainError("sigma_range and theta_range must be increasing")
        object.__setattr__(self, "holes", tuple(self.holes))
        object.__setattr__(self, "boundary", dict(self.boundary))
        expected = set(self.segments)
        got = set(self.boundary)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise DomainError(
                f"boundary conditions mismatch: missing {missing}, unexpected {extra}"
            )
        for name, bc in self.boundary.items():
            if not isinstance(bc, (Dirichlet, NeumannZero)):
                raise DomainError(f"segment {name}: unknown condition {bc!r}")
        for k, h in enumerate(self.holes):
            if not (s0 < h.sigma[0] and h.sigma[1] < s1):
                raise DomainError(f"hole{k} is not strictly interior in sigma")
            if not (t0 < h.theta[0] and h.theta[1] < t1):
                raise DomainError(f"hole{k} is not strictly interior in theta")
            for m in range(k):
                o = self.holes[m]
                if (h.sigma[0] <= o.sigma[1] and o.sigma[0] <= h.sigma[1]
                        and h.theta[0] <= o.theta[1] and o.theta[0] <= h.theta[1]):
                    raise DomainError(f"holes hole{m} and hole{k} intersect")

    @property
    def segments(self):
        outer = ["sigma_min", "sigma_max"]
        if not self.periodic:
            outer += ["theta_min", "theta_max"]
        return outer + [f"hole{k}" for k in range(len(self.holes))]

    @property
    def period(self) -> float:
        return self.theta_range[1] - self.theta_range[0]

    @property
    def dirichlet_only(self) -> bool:
        return all(isinstance(bc, Dirichlet) for bc in self.boundary.values())

    @classmethod
    def uniform(cls, sigma_range, theta_range, condition, holes=(), periodic=False):
        """Domain with the same condition on every segment."""
        names = ["sigma_min", "sigma_max"] + ([] if periodic else ["theta_min", "theta_max"])
        names += [f"hole{k}" for k in range(len(tuple(holes)))]
        return cls(tuple(sigma_range), tuple(theta_range), {n: condition for n in names},
                   tuple(holes), periodic)


@dataclass
class GridLayout:
    """Node classification of a domain sampled on a uniform grid."""

    sigma: np.ndarray
    theta: np.ndarray
    active: np.ndarray
    segment: np.ndarray  # -1 interior, else index into domain.segments
    hole_index: list     # (i0, i1, j0, j1) node index rectangle per hole


def _snap(value, origin, step):
    return int(round((value - origin) / step))


def layout(domain: GraphDomain, n_sigma: int, n_theta: int) -> GridLayout:
    """Classify the nodes of an ``n_sigma x n_theta`` grid on ``domain``."""
    if n_sigma - 2 < 4:
        raise ParameterError("need at least 4 interior points in sigma")
    if (n_theta if domain.periodic else n_theta - 2) < 4:
        raise ParameterError("need at least 4 interior points in theta")
    s0, s1 = domain.sigma_range
    t0, t1 = domain.theta_range
    sigma = np.linspace(s0, s1, n_sigma)
    if domain.periodic:
        theta = t0 + domain.period * np.arange(n_theta) / n_theta
    else:
        theta = np.linspace(t0, t1, n_theta)
    hs = sigma[1] - sigma[0]
    ht = (domain.period / n_theta) if domain.periodic else theta[1] - theta[0]

    active = np.ones((n_sigma, n_theta), dtype=bool)
    segment = np.full((n_sigma, n_theta), -1, dtype=int)
    names = domain.segments
    holes = []
    for k, h in enumerate(domain.holes):
        i0, i1 = _snap(h.sigma[0], s0, hs), _snap(h.sigma[1], s0, hs)
        j0, j1 = _snap(h.theta[0], t0, ht), _snap(h.theta[1], t0, ht)
        if i1 - i0 < 2 or j1 - j0 < 2:
            raise ParameterError(f"hole{k} is not resolved by the grid")
        if i0 < 1 or i1 > n_sigma - 2 or j0 < 1 or j1 > n_theta - 2:
            raise ParameterError(f"hole{k} touches the outer boundary after snapping")
        if np.any(~active[i0:i1 + 1, j0:j1 + 1]) or np.any(segment[i0:i1 + 1, j0:j1 + 1] >= 0):
            raise ParameterError(f"hole{k} overlaps another hole after snapping")
        active[i0 + 1:i1, j0 + 1:j1] = False
        rim = np.zeros_like(active)
        rim[i0:i1 + 1, j0:j1 + 1] = True
        rim[i0 + 1:i1, j0 + 1:j1] = False
        segment[rim] = names.index(f"hole{k}")
        holes.append((i0, i1, j0, j1))

    def tag(mask_slice, name):
        idx = names.index(name)
        view = segment[mask_slice]
        view[view < 0] = idx
        segment[mask_slice] = view

    # Corner nodes go to a Dirichlet segment when one is available; sigma
    # edges take precedence over theta edges.
    order = ["sigma_min", "sigma_max"] + ([] if domain.periodic else ["theta_min", "theta_max"])
    order.sort(key=lambda n: isinstance(domain.boundary[n], NeumannZero))
    slices = {
        "sigma_min": (0, slice(None)),
        "sigma_max": (n_sigma - 1, slice(None)),
        "theta_min": (slice(None), 0),
        "theta_max": (slice(None), n_theta - 1),
    }
    for name in order:
        tag(slices[name], name)
    return GridLayout(sigma, theta, active, segment, holes)


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    history: list
    tolerance: float = 0.0
    max_principle_ok: bool | None = None


@dataclass
class DiscreteGraph:
    """Graph values on the nodes of a log-polar grid.

    ``values`` has shape ``(n_sigma, n_theta)``; nodes strictly inside holes
    are NaN.  ``pitch`` is metadata (the helicoid pitch the graph perturbs).
    """

    domain: GraphDomain
    sigma: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    pitch: float = 0.0
    info: SolveInfo | None = None
    _layout: GridLayout | None = field(default=None, repr=False, compare=False)

    # -- construction -------------------------------------------------
    @classmethod
    def zeros(cls, domain: GraphDomain, n_sigma: int, n_theta: int, pitch: float = 0.0):
        lay = layout(domain, n_sigma, n_theta)
        values = np.where(lay.active, 0.0, np.nan)
        return cls(domain, lay.sigma, lay.theta, values, pitch, None, lay)

    @classmethod
    def from_function(cls, domain, n_sigma, n_theta, fn, pitch: float = 0.0):
        """Sample ``fn(sigma, theta)`` on the active nodes."""
        g = cls.zeros(domain, n_sigma, n_theta, pitch)
        S, T = g.mesh
        vals = np.asarray(fn(S, T), dtype=float) * np.ones_like(S)
        g.values = np.where(g.active, vals, np.nan)
        return g

    @property
    def layout(self) -> GridLayout:
        if self._layout is None:
            self._layout = layout(self.domain, len(self.sigma), len(self.theta))
        return self._layout

    def copy_with(self, values, info=None) -> "DiscreteGraph":
        return replace(self, values=np.array(values, dtype=float), info=info)

    # -- geometry of the grid -----------------------------------------
    @property
    def shape(self):
        return self.values.shape

    @property
    def h_sigma(self) -> float:
        return float(self.sigma[1] - self.sigma[0])

    @property
    def h_theta(self) -> float:
        if self.domain.periodic:
            return self.domain.period / len(self.theta)
        return float(self.theta[1] - self.theta[0])

    @property
    def mesh(self):
        return np.meshgrid(self.sigma, self.theta, indexing="ij")

    @property
    def z(self):
        S, T = self.mesh
        return np.exp(S + 1j * T)

    @property
    def active(self):
        return self.layout.active

    @property
    def segment(self):
        return self.layout.segment

    def segment_mask(self, name: str):
        return self.segment == self.domain.segments.index(name)

    @property
    def dirichlet_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        for name, bc in self.domain.boundary.items():
            if isinstance(bc, Dirichlet):
                mask |= self.segment_mask(name)
        return mask

    @property
    def boundary_mask(self):
        return self.segment >= 0

    def dirichlet_values(self):
        """Array with the prescribed Dirichlet data on Dirichlet nodes, NaN elsewhere."""
        out = np.full(self.shape, np.nan)
        S, T = self.mesh
        for name, bc in self.domain.boundary.items():
            if isinstance(bc, Dirichlet):
                m = self.segment_mask(name)
                out[m] = bc.evaluate(S[m], T[m])
        return out

    def with_dirichlet(self) -> "DiscreteGraph":
        vals = self.values.copy()
        d = self.dirichlet_values()
        m = ~np.isnan(d)
        vals[m] = d[m]
        return self.copy_with(vals, self.info)

    def sup_distance(self, other) -> float:
        """Sup-norm distance over active nodes to another graph or a function of (sigma, theta)."""
        if callable(other):
            S, T = self.mesh
            ref = np.asarray(other(S, T), dtype=float) * np.ones_like(S)
        else:
            ref = other.values
        return float(np.max(np.abs(self.values - ref)[self.active]))

    # -- gradients ----------------------------------------------------
    def _wrap_j(self, j):
        return np.mod(j, len(self.theta)) if self.domain.periodic else j

    def cell_gradients(self):
        """Central-difference gradient (f_sigma, f_theta) at cell centres.

        Cell ``(i, j)`` spans nodes ``i..i+1`` and ``j..j+1`` (wrapping in a
        periodic domain).  Cells with an excluded corner are NaN.
        """
        f = self.values
        if self.domain.periodic:
            f1 = np.roll(f, -1, axis=1)
        else:
            f1 = f[:, 1:]
            f = f[:, :-1]
        ds = ((f[1:] - f[:-1]) + (f1[1:] - f1[:-1])) / (2.0 * self.h_sigma)
        dt = ((f1[:-1] - f[:-1]) + (f1[1:] - f[1:])) / (2.0 * self.h_theta)
        return ds, dt

    def _locate(self, sigma, theta):
        t0 = self.domain.theta_range[0]
        if self.domain.periodic:
            theta = t0 + np.mod(theta - t0, self.domain.period)
        u = (sigma - self.sigma[0]) / self.h_sigma - 0.5
        v = (theta - t0) / self.h_theta - 0.5
        return u, v, theta

    def log_polar_gradient(self, sigma, theta, outside: str = "raise"):
        """Bilinear interpolation of cell-centred gradients at (sigma, theta).

        ``outside`` controls points without four surrounding active cell
        centres: ``"raise"`` (OutOfDomainError), or ``"cell"`` which falls
        back to the gradient of the containing cell and to zero outside the
        grid (zero extension used by energy/length integrals).
        """
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        ds, dt = self.cell_gradients()
        nci, ncj = ds.shape
        u, v, _ = self._locate(sigma, theta)
        i0 = np.floor(u).astype(int)
        j0 = np.floor(v).astype(int)
        a = u - i0
        b = v - j0
        out_s = np.zeros(sigma.shape)
        out_t = np.zeros(sigma.shape)
        ok = np.ones(sigma.shape, dtype=bool)
        periodic = self.domain.periodic
        for di, dj, w in ((0, 0, (1 - a) * (1 - b)), (1, 0, a * (1 - b)),
                          (0, 1, (1 - a) * b), (1, 1, a * b)):
            ii = i0 + di
            jj = j0 + dj
            if periodic:
                jj = np.mod(jj, ncj)
            inside = (ii >= 0) & (ii < nci) & (jj >= 0) & (jj < ncj)
            vs = np.full(sigma.shape, np.nan)
            vt = np.full(sigma.shape, np.nan)
            vs[inside] = ds[ii[inside], jj[inside]]
            vt[inside] = dt[ii[inside], jj[inside]]
            good = ~np.isnan(vs)
            ok &= good
            out_s += np.where(good, w * vs, 0.0)
            out_t += np.where(good, w * vt, 0.0)
        if np.all(ok):
            return out_s, out_t
        if outside == "raise":
            bad = np.flatnonzero(~ok)[0]
            raise OutOfDomainError(
                f"point (sigma={sigma[bad]:.6g}, theta={theta[bad]:.6g}) is not at least "
                "one cell inside the gridded domain"
            )
        # containing-cell fallback
        ci = np.floor(u + 0.5).astype(int)
        cj = np.floor(v + 0.5).astype(int)
        if periodic:
            cj = np.mod(cj, ncj)
        inside = (ci >= 0) & (ci < nci) & (cj >= 0) & (cj < ncj)
        fs = np.zeros(sigma.shape)
        ft = np.zeros(sigma.shape)
        fs[inside] = ds[ci[inside], cj[inside]]
        ft[inside] = dt[ci[inside], cj[inside]]
        fs = np.nan_to_num(fs, nan=0.0)
        ft = np.nan_to_num(ft, nan=0.0)
        return np.where(ok, out_s, fs), np.where(ok, out_t, ft)

    def gradient(self, z, argument=None, outside: str = "raise"):
        """Euclidean gradient ``(f_x, f_y)`` at points ``z``.

        ``argument`` carries the universal-cover argument of each point and
        is required unless the domain is periodic (then ``angle(z)`` is used).
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if argument is None:
            if not self.domain.periodic:
                raise ValueError("non-periodic domains need explicit arguments")
            argument = np.angle(z)
        argument = np.broadcast_to(np.asarray(argument, dtype=float), z.shape)
        r = np.abs(z)
        gs, gt = self.log_polar_gradient(np.log(r), argument, outside=outside)
        c, s = np.cos(argument), np.sin(argument)
        return (c * gs - s * gt) / r, (s * gs + c * gt) / r

    def node_gradient(self):
        """(f_sigma, f_theta) at active nodes; one-sided second order at edges."""
        f = self.values
        gs = _axis_derivative(f, 0, self.h_sigma, periodic=False)
        gt = _axis_derivative(f, 1, self.h_theta, periodic=self.domain.periodic)
        return gs, gt

    # -- serialisation -------------------------------------------------
    def to_csv(self, path) -> None:
        S, T = self.mesh
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sigma", "theta", "f"])
            for s, t, v in zip(S[self.active], T[self.active], self.values[self.active]):
                w.writerow([f"{s:.17g}", f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, domain: GraphDomain, pitch: float = 0.0) -> "DiscreteGraph":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["sigma", "theta", "f"]:
                raise ValueError(f"unexpected CSV header {header}")
            for row in reader:
                rows.append([float(x) for x in row])
        data = np.array(rows, dtype=float)
        sig = np.unique(data[:, 0])
        the = np.unique(data[:, 1])
        g = cls.zeros(domain, len(sig), len(the), pitch)
        if not (np.allclose(g.sigma, sig, rtol=0, atol=1e-12)
                and np.allclose(g.theta, the, rtol=0, atol=1e-12)):
            raise ValueError("CSV nodes do not form the grid of the given domain")
        ii = np.searchsorted(sig, data[:, 0])
        jj = np.searchsorted(the, data[:, 1])
        vals = np.full(g.shape, np.nan)
        vals[ii, jj] = data[:, 2]
        if not np.array_equal(~np.isnan(vals), g.active):
            raise ValueError("CSV nodes do not match the active nodes of the domain")
        g.values = vals
        return g


def _axis_derivative(f, axis, h, periodic):
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    out = np.full(f.shape, np.nan)
    if periodic:
        out = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2 * h)
        return np.moveaxis(out, 0, axis)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    fwd = np.full(f.shape, np.nan)
    bwd = np.full(f.shape, np.nan)
    fwd[:-2] = (-3 * f[:-2] + 4 * f[1:-1] - f[2:]) / (2 * h)
    bwd[2:] = (3 * f[2:] - 4 * f[1:-1] + f[:-2]) / (2 * h)
    fwd1 = np.full(f.shape, np.nan)
    bwd1 = np.full(f.shape, np.nan)
    fwd1[:-1] = (f[1:] - f[:-1]) / h
    bwd1[1:] = (f[1:] - f[:-1]) / h
    for cand in (fwd, bwd, fwd1, bwd1):
        fill = np.isnan(out) & ~np.isnan(cand)
        out[fill] = cand[fill]
    out[np.isnan(f)] = np.nan
    return np.moveaxis(out, 0, axis)
