"""Laurent decompositions and contour residues, applied to the neck force integral.

A C^1 function ``g`` on a disk with holes splits by the Cauchy-Pompeiu formula
into a holomorphic part, one principal part per hole and an area term:

    g(z) = sum_k a_k z^k + sum_i sum_k a_{i,k} (z - p_i)^{-k}
           - (1/pi) iint g_wbar(w) / (w - z) dA(w).

Contour coefficients use the periodic trapezoid rule; the area term is
integrated in polar coordinates centred at the evaluation point, which
removes the 1/(w - z) singularity.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .barriers import LimitConfig, limit_u_tilde_z
from .errors import DomainError, ParameterError, ToleranceError
from .geometry import UniversalCoverPoint

__all__ = [
    "LaurentSeries",
    "laurent_decompose",
    "contour_residue",
    "log_pole_kernel",
    "residue_log_pole",
    "force_bracket",
    "force_integral_case1",
    "lowest_pole_contour",
]

MAX_POINTS = 2 ** 16


def _trapezoid_coeffs(g, center, radius, powers, tol):
    """``(1/n) sum g(c + r e^{i phi_j}) e^{-i k phi_j}`` for each k, refined by doubling."""
    powers = np.asarray(powers)
    prev = None
    n = max(32, 4 * int(np.max(np.abs(powers))) + 4)
    while n <= MAX_POINTS:
        phi = 2 * np.pi * np.arange(n) / n
        vals = np.asarray(g(center + radius * np.exp(1j * phi)), dtype=complex)
        coeffs = np.exp(-1j * np.outer(powers, phi)) @ vals / n
        if prev is not None:
            scale = max(1.0, float(np.max(np.abs(coeffs))))
            if np.max(np.abs(coeffs - prev)) <= tol * scale:
                return coeffs
        prev = coeffs
        n *= 2
    raise ToleranceError("contour coefficients did not converge", last_residual=float("nan"),
                         iterations=n)


@dataclass
class LaurentSeries:
    """Truncated Cauchy-Pompeiu decomposition on ``D(center, R)`` minus disks."""

    outer_coeffs: np.ndarray
    inner_coeffs: list
    holes: list
    K: int
    R: float
    center: complex = 0j
    g_zbar: Optional[Callable] = None
    tail: dict = field(default_factory=dict)
    area_tol: float = 1e-6

    def g_plus(self, z):
        w = np.asarray(z, dtype=complex) - self.center
        return np.polynomial.polynomial.polyval(w, self.outer_coeffs)

    def g_minus(self, i: int, z):
        p, _ = self.holes[i]
        u = 1.0 / (np.asarray(z, dtype=complex) - p)
        return u * np.polynomial.polynomial.polyval(u, self.inner_coeffs[i])

    def correction(self, z: complex) -> complex:
        """Area term ``-(1/pi) iint g_wbar(w) / (w - z) dA`` at one point."""
        if self.g_zbar is None:
            return 0j
        return _area_term(self.g_zbar, complex(z), self.center, self.R, self.holes,
                          self.area_tol)

    def reconstruct(self, z: complex) -> complex:
        z = complex(z)
        out = complex(self.g_plus(z))
        for i in range(len(self.holes)):
            out += complex(self.g_minus(i, z))
        return out + self.correction(z)

    def as_dict(self):
        pair = lambda c: [float(c.real), float(c.imag)]  # noqa: E731
        return {
            "truncation": self.K,
            "outer_radius": self.R,
            "center": pair(complex(self.center)),
            "outer_coeffs": [pair(c) for c in self.outer_coeffs],
            "holes": [
                {"center": pair(complex(p)), "radius": r, "coeffs": [pair(c) for c in co]}
                for (p, r), co in zip(self.holes, self.inner_coeffs)
            ],
            "tail": self.tail,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _check_holes(center, R, holes):
    for i, (p, r) in enumerate(holes):
        if r <= 0:
            raise DomainError(f"hole {i} has nonpositive radius")
        if abs(p - center) + r >= R:
            raise DomainError(f"hole {i} is not interior to the outer disk")
        for j in range(i):
            q, s = holes[j]
            if abs(p - q) <= r + s:
                raise DomainError(f"holes {j} and {i} overlap")


def laurent_decompose(g: Callable, g_zbar: Optional[Callable], R: float,
                      holes: Sequence = (), K: int = 30, *, center: complex = 0j,
                      tol: float = 1e-14, area_tol: float = 1e-6) -> LaurentSeries:
    """Coefficients of the Cauchy-Pompeiu decomposition.

    ``g`` and ``g_zbar`` must accept complex arrays.  ``g_zbar=None`` declares
    ``g`` holomorphic, so the area term vanishes identically.

    Raises
    ------
    DomainError
        Holes intersect each other or leave the outer disk.
    ToleranceError
        A contour quadrature fails to settle below ``2**16`` points.
    """
    if K < 1:
        raise ParameterError("truncation K must be at least 1")
    holes = [(complex(p), float(r)) for p, r in holes]
    _check_holes(complex(center), R, holes)
    ks = np.arange(K + 1)
    c = _trapezoid_coeffs(g, center, R, ks, tol)
    outer = c / R ** ks
    inner = []
    tail = {"outer": float(abs(outer[-1]) * R ** K)}
    kk = np.arange(1, K + 1)
    for i, (p, r) in enumerate(holes):
        ci = _trapezoid_coeffs(g, p, r, -kk, tol)
        co = ci * r ** kk
        inner.append(co)
        tail[f"hole{i}"] = float(abs(co[-1]) / r ** K)
    return LaurentSeries(outer, inner, holes, K, float(R), complex(center), g_zbar, tail,
                         area_tol)


def _area_once(g_zbar, z, center, R, holes, m):
    """Polar quadrature of ``iint g_wbar(w) / (w - z) dA`` around ``z`` with order ``m``."""
    # panel breakpoints: directions tangent to each hole, seen from z
    brk = [0.0, 2 * math.pi]
    for p, r in holes:
        d = p - z
        base = cmath.phase(d)
        half = math.asin(r / abs(d))
        brk += [(base - half) % (2 * math.pi), (base + half) % (2 * math.pi)]
    brk = np.unique(np.array(brk))
    x, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    # cosine substitution clusters nodes at panel ends, smoothing sqrt kinks
    s = 0.5 * (1.0 - np.cos(np.pi * u))
    ds = 0.5 * np.pi * np.sin(np.pi * u)
    a, b = brk[:-1, None], brk[1:, None]
    phi = (a + (b - a) * s).ravel()
    wphi = ((b - a) * ds * wu).ravel()
    e = np.exp(1j * phi)
    z0 = z - center
    proj = np.real(np.conj(z0) * e)
    rho_out = -proj + np.sqrt(proj ** 2 - abs(z0) ** 2 + R * R)
    nh = len(holes)
    A = np.tile(rho_out[:, None], (1, nh)) if nh else np.zeros((phi.size, 0))
    B = A.copy()
    for i, (p, r) in enumerate(holes):
        d = p - z
        bb = np.real(d * np.conj(e))
        disc = bb ** 2 - abs(d) ** 2 + r * r
        hit = (disc > 0) & (bb > 0)
        sq = np.sqrt(np.where(hit, disc, 0.0))
        A[:, i] = np.where(hit, bb - sq, rho_out)
        B[:, i] = np.where(hit, bb + sq, rho_out)
    order = np.argsort(A, axis=1)
    A = np.take_along_axis(A, order, axis=1)
    B = np.take_along_axis(B, order, axis=1)
    starts = np.concatenate([np.zeros((phi.size, 1)), B], axis=1)
    ends = np.concatenate([A, rho_out[:, None]], axis=1)
    length = np.maximum(ends - starts, 0.0)
    rho = starts[..., None] + length[..., None] * u
    wrho = length[..., None] * wu
    pts = z + rho * e[:, None, None]
    vals = np.asarray(g_zbar(pts), dtype=complex)
    inner = np.sum(vals * wrho, axis=(1, 2))
    # dA / (w - z) = rho drho dphi / (rho e^{i phi}) = e^{-i phi} drho dphi
    return -np.sum(inner * np.conj(e) * wphi) / math.pi


def _area_term(g_zbar, z, center, R, holes, tol):
    if abs(z - center) >= R or any(abs(z - p) <= r for p, r in holes):
        raise DomainError("evaluation point must lie inside the domain")
    prev = _area_once(g_zbar, z, center, R, holes, 16)
    m = 32
    while m <= 512:
        cur = _area_once(g_zbar, z, center, R, holes, m)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return complex(cur)
        prev, m = cur, 2 * m
    raise ToleranceError("area term did not reach the requested agreement",
                         last_residual=float(abs(cur - prev)), iterations=m)


def contour_residue(g: Callable, center: complex, radius: float, *, tol: float = 1e-12) -> complex:
    """``(1/2 pi i) int_{C(center, radius)} g dz`` by a doubling trapezoid rule."""
    if radius <= 0:
        raise ParameterError("radius must be positive")
    n = 16
    prev = None
    while n <= MAX_POINTS:
        phi = 2 * np.pi * np.arange(n) / n
        e = radius * np.exp(1j * phi)
        val = complex(np.mean(np.asarray(g(center + e), dtype=complex) * e))
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        n *= 2
    raise ToleranceError("contour residue did not converge", last_residual=abs(val - prev),
                         iterations=n)


def log_pole_kernel(p: complex, weighted: bool) -> Callable:
    """``(log z - log p)^-1`` or ``((1 - z^2)/(4 z^2)) (log z - log p)^-2`` near ``p``.

    The logarithm difference is evaluated as ``log(z / p)``, the branch that is
    continuous on small circles around ``p``.
    """
    p = complex(p)
    if weighted:
        return lambda z: (1 - z * z) / (4 * z * z) / np.log(z / p) ** 2
    return lambda z: 1.0 / np.log(z / p)


def residue_log_pole(p: complex, weighted: bool = False) -> complex:
    """Closed-form residues at ``p`` of the two logarithmic kernels."""
    p = complex(p)
    if p == 0:
        raise ParameterError("p must be nonzero")
    if not weighted:
        return p
    return -(1 + p * p) / (4 * p)


def _pair_kernel(x, y):
    d = math.log(x) - math.log(y)
    return -2 * math.pi ** 2 / (d * abs(complex(d, math.pi)) ** 2)


def force_bracket(heights: Sequence[float], masses: Sequence[float]) -> float:
    """``c1^2 (1 - y1^2)/(1 + y1^2) + sum_{i>=2} c1 c_i f(y1, y_i)``."""
    y1, c1 = heights[0], masses[0]
    out = c1 * c1 * (1 - y1 * y1) / (1 + y1 * y1)
    for y, c in zip(heights[1:], masses[1:]):
        out += c1 * c * _pair_kernel(y1, y)
    return out


def _check_eps(heights, eps):
    y = list(heights)
    gaps = [b - a for a, b in zip(y, y[1:])]
    limit = min([0.5 * g for g in gaps] + [y[0]])
    if not (0 < eps < limit):
        raise DomainError(f"contour radius {eps} must be positive and below {limit}")


def force_integral_case1(config: LimitConfig, eps: float | None = None, *, tol: float = 1e-13):
    """Neck force around the lowest pole, by contour quadrature and in closed form.

    Returns ``(contour, closed_form)`` where ``contour`` is
    ``-Re int_{C(p1, eps)} (u_z)^2 (1 - z^2) dz`` and ``closed_form`` is
    ``pi (y1^2 + 1) / (2 y1)`` times ``force_bracket``.
    """
    y = config.heights
    c = config.masses
    if not y:
        raise ParameterError("configuration has no poles")
    if eps is None:
        gaps = [b - a for a, b in zip(y, y[1:])]
        eps = 0.25 * min(gaps + [y[0]])
    _check_eps(y, eps)
    p1 = complex(0, y[0])

    def integrand(z):
        z = np.asarray(z, dtype=complex)
        arg = math.pi / 2 + np.angle(z / p1)
        uz = limit_u_tilde_z(config, (np.abs(z), arg))
        return uz * uz * (1 - z * z)

    res = contour_residue(integrand, p1, eps, tol=tol)
    contour = -(2j * math.pi * res).real
    closed = math.pi * (y[0] ** 2 + 1) / (2 * y[0]) * force_bracket(y, c)
    return contour, closed


def lowest_pole_contour(heights: Sequence[float], masses: Sequence[float], eps: float | None = None):
    """Unweighted force with ``u_z = -sum c_i / (2 (z - i y_i))`` around the lowest pole.

    Returns ``(contour, closed_form)`` with closed form ``-pi sum c1 c_i / (y1 - y_i)``.
    """
    y = [float(v) for v in heights]
    c = [float(v) for v in masses]
    if any(b <= a for a, b in zip(y, y[1:])):
        raise ParameterError("heights must be strictly increasing")
    if eps is None:
        gaps = [b - a for a, b in zip(y, y[1:])]
        eps = 0.25 * min(gaps + [y[0]])
    _check_eps(y, eps)
    poles = np.array([complex(0, v) for v in y])
    cs = np.array(c)

    def integrand(z):
        z = np.asarray(z, dtype=complex)
        uz = -np.sum(cs / (2 * (z[..., None] - poles)), axis=-1)
        return uz * uz

    res = contour_residue(integrand, poles[0], eps)
    contour = -(2j * math.pi * res).real
    closed = -math.pi * sum(c[0] * cj / (y[0] - yj) for yj, cj in zip(y[1:], c[1:]))
    return contour, closed


def cover_point(z: complex, reference: UniversalCoverPoint) -> UniversalCoverPoint:
    """Lift ``z`` to the sheet of ``reference`` (continuous argument near it)."""
    return UniversalCoverPoint(abs(z), reference.argument + cmath.phase(z / reference.z))
