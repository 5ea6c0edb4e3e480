"""Harmonic barriers and limit functions on the universal cover of C*.

All functions take points of the cover either as ``UniversalCoverPoint`` or
as a pair ``(modulus, argument)`` of equally shaped arrays.  Logarithms are
always ``log|z| + i arg z`` with the carried argument, so nothing here has a
branch cut.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError, PoleError
from .geometry import UniversalCoverPoint

__all__ = [
    "green_h",
    "barrier_H",
    "barrier_H_polar",
    "cutoff",
    "delta",
    "barrier_g",
    "barrier_g_laplacian",
    "calibrate_C2",
    "LimitConfig",
    "symmetrize_poles",
    "limit_u_tilde",
    "limit_u_tilde_z",
    "fd_laplacian",
]


def _split(z):
    """Return ``(log z, z)`` as complex arrays (or scalars) for a cover point."""
    if isinstance(z, UniversalCoverPoint):
        return z.log, z.z
    modulus, argument = z
    modulus = np.asarray(modulus, dtype=float)
    argument = np.asarray(argument, dtype=float)
    if np.any(modulus <= 0):
        raise DomainError("cover points need a positive modulus")
    logz = np.log(modulus) + 1j * argument
    return logz, modulus * np.exp(1j * argument)


def _scalar(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def green_h(p: UniversalCoverPoint, z) -> float | np.ndarray:
    """``h_p(z) = -log |(log z - log p) / (log z - log conj p)|``.

    Harmonic off ``{p, conj p}``, zero on ``arg z = 0`` and positive when both
    arguments are positive.
    """
    lz, _ = _split(z)
    lp = p.log
    a = lz - lp
    b = lz - np.conj(lp)
    if np.any(a == 0) or np.any(b == 0):
        raise PoleError("h_p evaluated at its pole or at the conjugate pole")
    return _scalar(-np.log(np.abs(a) / np.abs(b)))


def _check_t(t):
    if not (0.0 < t < 1.0):
        raise ParameterError(f"barrier parameter t must lie in (0, 1), got {t}")


def barrier_H(t: float, z) -> float | np.ndarray:
    """``H_t(z) = Im(log t log z / (log t + i log z))`` for ``arg z > 0``."""
    _check_t(t)
    lz, _ = _split(z)
    if np.any(np.imag(lz) <= 0):
        raise DomainError("H_t is defined for arg z > 0")
    L = math.log(t)
    return _scalar(np.imag(L * lz / (L + 1j * lz)))


def barrier_H_polar(t: float, modulus, argument) -> float | np.ndarray:
    """Real closed form of ``H_t`` in polar coordinates, for cross-checking."""
    _check_t(t)
    L = math.log(t)
    s = np.log(np.asarray(modulus, dtype=float))
    th = np.asarray(argument, dtype=float)
    return _scalar((L * L * th + abs(L) * (s * s + th * th)) / ((L - th) ** 2 + s * s))


def cutoff(theta, derivative: int = 0):
    """C^2 quintic smoothstep: 1 on ``(-inf, pi]``, 0 on ``[2 pi, inf)``."""
    s = np.clip((np.asarray(theta, dtype=float) - math.pi) / math.pi, 0.0, 1.0)
    if derivative == 0:
        out = 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
    elif derivative == 1:
        out = -30.0 * s * s * (1.0 - s) ** 2 / math.pi
    elif derivative == 2:
        out = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / math.pi ** 2
    else:
        raise ParameterError("only derivatives up to order 2 are available")
    return _scalar(out)


def _pole_values(poles):
    return np.array([p.z for p in poles], dtype=complex)


def delta(z, poles: Sequence[UniversalCoverPoint]):
    """Distance function of the barrier estimate.

    ``min(|z|, |z - p_j|)`` on the first half sheet ``arg z < pi`` and ``|z|``
    once ``arg z >= pi``.
    """
    lz, zc = _split(z)
    zc = np.asarray(zc)
    r = np.abs(zc)
    if len(poles) == 0:
        return _scalar(r)
    dist = np.min(np.abs(zc[..., None] - _pole_values(poles)), axis=-1)
    near = np.imag(lz) < math.pi
    return _scalar(np.where(near, np.minimum(r, dist), r))


def _check_g_args(lz, zc, poles):
    if np.any(np.imag(lz) < 0):
        raise DomainError("barrier g is defined for arg z >= 0")
    if len(poles) and np.any(np.asarray(zc)[..., None] == _pole_values(poles)):
        raise PoleError("barrier g evaluated at a pole")


def barrier_g(poles: Sequence[UniversalCoverPoint], C2: float, z):
    """``g(z) = C2 / |z|^2 + cutoff(arg z) * sum_j 1 / |z - p_j|^2``."""
    if C2 < 1:
        raise ParameterError("C2 must be at least 1")
    lz, zc = _split(z)
    _check_g_args(lz, zc, poles)
    zc = np.asarray(zc)
    out = C2 / np.abs(zc) ** 2
    if len(poles):
        s = np.sum(1.0 / np.abs(zc[..., None] - _pole_values(poles)) ** 2, axis=-1)
        out = out + cutoff(np.imag(lz)) * s
    return _scalar(out)


def barrier_g_laplacian(poles: Sequence[UniversalCoverPoint], C2: float, z):
    """Analytic Euclidean Laplacian of ``barrier_g``."""
    lz, zc = _split(z)
    _check_g_args(lz, zc, poles)
    zc = np.asarray(zc)
    theta = np.imag(lz)
    r = np.abs(zc)
    out = 4.0 * C2 / r ** 4
    if len(poles):
        d = zc[..., None] - _pole_values(poles)
        ad2 = np.abs(d) ** 2
        q = np.sum(1.0 / ad2, axis=-1)
        lap_q = np.sum(4.0 / ad2 ** 2, axis=-1)
        # grad q = -2 d / |d|^4 ; grad cutoff = cutoff' / r * e_theta, e_theta = i z / r
        e_theta = 1j * zc / r
        dot = np.sum(np.real(np.conj(e_theta)[..., None] * (-2.0 * d / ad2 ** 2)), axis=-1)
        c0 = np.asarray(cutoff(theta))
        c1 = np.asarray(cutoff(theta, 1))
        c2 = np.asarray(cutoff(theta, 2))
        out = out + c2 / r ** 2 * q + 2.0 * c1 / r * dot + c0 * lap_q
    return _scalar(out)


@functools.lru_cache(maxsize=128)
def _calibrate(key, n):
    poles = [UniversalCoverPoint(m, a) for m, a in key]
    if not poles:
        return 1.0
    mods = [p.modulus for p in poles]
    s = np.linspace(math.log(min(mods)) - 4.0, math.log(max(mods)) + 4.0, n)
    th = np.linspace(math.pi, 2.0 * math.pi, n)
    S, T = np.meshgrid(s, th, indexing="ij")
    r = np.exp(S)
    rest = barrier_g_laplacian(poles, 1.0, (r, T)) - 4.0 / r ** 4
    # need 4 C2 / r^4 + rest >= 4 / r^4 on the transition sheet, where delta = |z|
    need = 1.0 - r ** 4 * rest / 4.0
    return float(max(1.0, 2.0 * float(np.max(need))))


def calibrate_C2(poles: Sequence[UniversalCoverPoint], n: int = 200) -> float:
    """Constant ``C2 >= 1`` making ``Delta g >= 4 / delta^4`` on a sample grid.

    On ``0 < arg z < pi`` and ``arg z >= 2 pi`` any ``C2 >= 1`` works; on the
    transition sheet the deficiency is maximised over an ``n x n`` grid in
    ``(log r, theta)`` and doubled.  Results are cached per pole set.
    """
    key = tuple(sorted((float(p.modulus), float(p.argument)) for p in poles))
    return _calibrate(key, int(n))


@dataclass(frozen=True)
class LimitConfig:
    """Rotational weight ``c0`` and poles ``i y_j`` (argument pi/2) with masses."""

    c0: float
    poles: tuple = ()

    def __post_init__(self):
        if self.c0 < 0:
            raise ParameterError("c0 must be nonnegative")
        poles = tuple((p, float(c)) for p, c in self.poles)
        object.__setattr__(self, "poles", poles)
        last = 0.0
        for p, c in poles:
            if abs(p.argument - math.pi / 2) > 1e-12:
                raise ParameterError("limit poles must have argument pi/2")
            if c < 0:
                raise ParameterError("pole masses must be nonnegative")
            if p.modulus <= last:
                raise ParameterError("pole moduli must be strictly increasing")
            last = p.modulus

    @classmethod
    def from_heights(cls, c0: float, heights: Sequence[float], masses: Sequence[float]):
        if len(heights) != len(masses):
            raise ParameterError("heights and masses differ in length")
        return cls(c0, tuple((UniversalCoverPoint(float(y), math.pi / 2), c)
                             for y, c in zip(heights, masses)))

    @property
    def heights(self):
        return [p.modulus for p, _ in self.poles]

    @property
    def masses(self):
        return [c for _, c in self.poles]

    def symmetrized(self) -> "LimitConfig":
        """Add the inverted pole ``1 / conj p`` with the same mass for every pole."""
        table = {}
        for p, c in self.poles:
            for q in (p, p.inv_conj()):
                key = round(q.modulus, 14)
                if key in table and abs(table[key][1] - c) > 1e-12:
                    raise ParameterError("pole and inverted pole carry different masses")
                table[key] = (q, c)
        return LimitConfig(self.c0, tuple(table[k] for k in sorted(table)))


def symmetrize_poles(poles: Sequence[UniversalCoverPoint]):
    """Union of ``poles`` and their images under ``p -> 1 / conj p``, sorted by modulus."""
    table = {}
    for p in poles:
        for q in (p, p.inv_conj()):
            table[(round(q.modulus, 14), round(q.argument, 14))] = q
    return [table[k] for k in sorted(table)]


def limit_u_tilde(config: LimitConfig, z):
    """``c0 arg z + sum_i c_i h_{p_i}(z)``."""
    lz, _ = _split(z)
    out = config.c0 * np.imag(lz)
    for p, c in config.poles:
        out = out + c * np.asarray(green_h(p, z))
    return _scalar(out)


def limit_u_tilde_z(config: LimitConfig, z):
    """Complex derivative ``d u / dz`` of the limit function."""
    lz, zc = _split(z)
    out = config.c0 / (2j * zc)
    for p, c in config.poles:
        a = lz - p.log
        b = lz - np.conj(p.log)
        if np.any(a == 0) or np.any(b == 0):
            raise PoleError("derivative evaluated at a pole")
        out = out - c / (2.0 * zc) * (1.0 / a - 1.0 / b)
    out = np.asarray(out)
    return complex(out) if out.ndim == 0 else out


def fd_laplacian(fn, z: UniversalCoverPoint, h: float) -> float:
    """Five-point Euclidean Laplacian of ``fn`` at a cover point, step ``h``."""
    vals = [fn(z.shifted(d)) for d in (h, -h, 1j * h, -1j * h)]
    return (sum(vals) - 4.0 * fn(z)) / (h * h)
