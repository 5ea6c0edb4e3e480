"""Ambient geometry of S^2(R) x R in the stereographic model.

The base sphere is C u {oo} with conformal metric ``lam(z)^2 |dz|^2`` where

    lam(z) = 2 R^2 / (R^2 + |z|^2).

(Another common normalisation uses 4 R^2 in the numerator; every formula in
this package is written for the 2 R^2 convention above.)  The equator is the
circle |z| = R, the geodesics X and Y are the real and imaginary axes.

Arguments of points are measured from the positive real axis.  Points of the
universal cover of C* are (modulus, argument) pairs with unrestricted real
argument; they are never collapsed to bare complex numbers where the winding
matters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, UnsupportedMetricError

__all__ = [
    "ConformalMetric",
    "SPHERE",
    "FLAT",
    "KillingField",
    "killing_field",
    "rotation_field",
    "UniversalCoverPoint",
    "HelicoidGraph",
    "CatenoidGraph",
    "helicoid_graph",
    "catenoid_graph",
    "CensusResult",
    "y_surface_census",
]


@dataclass(frozen=True)
class ConformalMetric:
    """Conformal metric ``lam^2 |dz|^2`` on a plane domain.

    ``kind`` is ``"sphere"`` (stereographic sphere of radius ``R``) or
    ``"flat"`` (``lam == 1``; ``R`` is ignored).
    """

    kind: str = "sphere"
    R: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sphere", "flat"):
            raise ParameterError(f"unknown metric kind {self.kind!r}")
        if self.kind == "sphere" and not (self.R > 0 and math.isfinite(self.R)):
            raise ParameterError(f"sphere radius must be positive, got {self.R}")

    @property
    def is_sphere(self) -> bool:
        return self.kind == "sphere"

    def lam(self, z):
        z = np.asarray(z, dtype=complex)
        if not self.is_sphere:
            return np.ones(z.shape)
        R2 = self.R * self.R
        return 2.0 * R2 / (R2 + np.abs(z) ** 2)

    def lam_x(self, z):
        z = np.asarray(z, dtype=complex)
        if not self.is_sphere:
            return np.zeros(z.shape)
        R2 = self.R * self.R
        return -4.0 * R2 * z.real / (R2 + np.abs(z) ** 2) ** 2

    def lam_y(self, z):
        z = np.asarray(z, dtype=complex)
        if not self.is_sphere:
            return np.zeros(z.shape)
        R2 = self.R * self.R
        return -4.0 * R2 * z.imag / (R2 + np.abs(z) ** 2) ** 2

    def log_grad(self, z):
        """Return ``(lam_x / lam, lam_y / lam)``."""
        z = np.asarray(z, dtype=complex)
        if not self.is_sphere:
            return np.zeros(z.shape), np.zeros(z.shape)
        d = self.R * self.R + np.abs(z) ** 2
        return -2.0 * z.real / d, -2.0 * z.imag / d

    def radial_factor(self, sigma):
        """Conformal factor in log-polar coordinates, ``lam(e^sigma) e^sigma``.

        In w = sigma + i theta the metric reads ``Lam^2 |dw|^2`` with this
        ``Lam``; it depends on sigma only.
        """
        sigma = np.asarray(sigma, dtype=float)
        r = np.exp(sigma)
        return self.lam(r) * r

    def radial_log_derivative(self, sigma):
        """``d log(Lam) / d sigma``; equals ``(R^2 - r^2)/(R^2 + r^2)`` on the sphere."""
        sigma = np.asarray(sigma, dtype=float)
        if not self.is_sphere:
            return np.ones(sigma.shape)
        r2 = np.exp(2.0 * sigma)
        R2 = self.R * self.R
        return (R2 - r2) / (R2 + r2)


SPHERE = ConformalMetric("sphere", 1.0)
FLAT = ConformalMetric("flat", 1.0)


class KillingField(enum.Enum):
    """The four generators of the Killing algebra of S^2(R) x R."""

    CHI_X = "chiX"
    CHI_Y = "chiY"
    CHI_E = "chiE"
    VERTICAL = "vertical"

    @property
    def horizontal(self) -> bool:
        return self is not KillingField.VERTICAL

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name):
                return member
        raise ParameterError(f"unknown Killing field {value!r}")


#: Unit vertical vector in (x, y, height) coordinates.
VERTICAL_UNIT = (0.0, 0.0, 1.0)


def killing_field(metric: ConformalMetric, field, z):
    """Evaluate a Killing field at ``z``.

    Horizontal fields are returned as complex numbers (the vector
    ``Re + i Im`` in the base).  The vertical field returns ``VERTICAL_UNIT``.
    """
    field = KillingField.parse(field)
    if field is KillingField.VERTICAL:
        return VERTICAL_UNIT
    if not metric.is_sphere:
        raise UnsupportedMetricError(
            f"horizontal Killing field {field.value} requires the sphere metric"
        )
    z = np.asarray(z, dtype=complex)
    R = metric.R
    if field is KillingField.CHI_X:
        out = 0.5 * (1.0 + z * z / (R * R))
    elif field is KillingField.CHI_Y:
        out = 0.5j * (1.0 - z * z / (R * R))
    else:
        out = 1j * z / R
    return out[()] if out.ndim == 0 else out


def rotation_field(z):
    """Generator ``d/dtheta = i z`` of rotations about the vertical axis Z."""
    return 1j * np.asarray(z, dtype=complex)


@dataclass(frozen=True)
class UniversalCoverPoint:
    """A point of the universal cover of C*: modulus and unrestricted argument."""

    modulus: float
    argument: float

    def __post_init__(self):
        if not self.modulus > 0:
            raise DomainError(f"modulus must be positive, got {self.modulus}")

    @classmethod
    def from_complex(cls, z: complex, argument: float | None = None):
        return cls(abs(z), float(np.angle(z)) if argument is None else argument)

    @property
    def log(self) -> complex:
        return complex(math.log(self.modulus), self.argument)

    @property
    def z(self) -> complex:
        return self.modulus * complex(math.cos(self.argument), math.sin(self.argument))

    def conj(self) -> "UniversalCoverPoint":
        """Image under (z, arg z) -> (conj z, -arg z)."""
        return UniversalCoverPoint(self.modulus, -self.argument)

    def inv_conj(self) -> "UniversalCoverPoint":
        """Image under (z, arg z) -> (1/conj z, arg z)."""
        return UniversalCoverPoint(1.0 / self.modulus, self.argument)

    def shifted(self, dz: complex) -> "UniversalCoverPoint":
        """The point ``z + dz`` on the same sheet, for ``|dz| < |z|``."""
        if abs(dz) >= self.modulus:
            raise DomainError("shift would cross the origin")
        w = self.z + dz
        return UniversalCoverPoint(abs(w), self.argument + math.atan2(
            (w / self.z).imag, (w / self.z).real))


class HelicoidGraph:
    """Half helicoid ``f = (t / 2 pi) * arg`` over the universal cover.

    Pitch ``t`` is twice the vertical distance between successive sheets;
    the standard helicoid has pitch 2 pi.  The graph is minimal for the
    flat metric and for every sphere metric.
    """

    def __init__(self, pitch: float):
        if pitch == 0 or not math.isfinite(pitch):
            raise ParameterError("helicoid pitch must be finite and nonzero")
        self.pitch = float(pitch)

    def __call__(self, modulus, argument):
        return self.pitch / (2.0 * math.pi) * np.asarray(argument, dtype=float)

    def on_grid(self, sigma, theta):
        return self.pitch / (2.0 * math.pi) * np.asarray(theta, dtype=float) + 0.0 * sigma

    def gradient(self, z, argument=None):
        """Euclidean gradient ``(f_x, f_y)``; the argument is irrelevant."""
        z = np.asarray(z, dtype=complex)
        c = self.pitch / (2.0 * math.pi)
        r2 = np.abs(z) ** 2
        return -c * z.imag / r2, c * z.real / r2


class CatenoidGraph:
    """Upper half of the standard catenoid, ``f(z) = arccosh |z|`` for |z| >= 1.

    Minimal for the flat metric.  ``offset`` shifts the graph vertically.
    """

    def __init__(self, offset: float = 0.0):
        self.offset = float(offset)

    def _modulus(self, z):
        r = np.abs(np.asarray(z, dtype=complex))
        if np.any(r < 1.0):
            raise DomainError("catenoid graph is defined only for |z| >= 1")
        return r

    def __call__(self, z):
        return np.arccosh(self._modulus(z)) + self.offset

    def on_grid(self, sigma, theta):
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma < 0):
            raise DomainError("catenoid graph is defined only for |z| >= 1")
        return np.arccosh(np.exp(sigma)) + 0.0 * np.asarray(theta, dtype=float) + self.offset

    def gradient(self, z, argument=None):
        z = np.asarray(z, dtype=complex)
        r = self._modulus(z)
        with np.errstate(divide="ignore"):
            scale = 1.0 / (r * np.sqrt(r * r - 1.0))
        return scale * z.real, scale * z.imag


def helicoid_graph(pitch: float) -> HelicoidGraph:
    return HelicoidGraph(pitch)


def catenoid_graph(offset: float = 0.0) -> CatenoidGraph:
    return CatenoidGraph(offset)


@dataclass(frozen=True)
class CensusResult:
    fixed_points: int
    ends: int
    genus: int
    components: int

    def euler_identity_holds(self) -> bool:
        k, e, g, c = self.fixed_points, self.ends, self.genus, self.components
        return 2 - k == 2 * c - 2 * g - e

    def as_dict(self):
        return {
            "fixed_points": self.fixed_points,
            "ends": self.ends,
            "genus": self.genus,
            "components": self.components,
        }


def y_surface_census(k: int) -> CensusResult:
    """Topology of a Y-surface whose rho_Y rotation has ``k`` fixed points.

    The quotient by rho_Y is a disk, so there are one or two ends, with
    ``k`` and the number of ends congruent mod 2.  ``k = 0`` forces two disks;
    otherwise the surface is connected with genus ``(k - e) / 2``.
    """
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise ParameterError(f"fixed-point count must be a nonnegative integer, got {k!r}")
    k = int(k)
    ends = 1 if k % 2 else 2
    if k == 0:
        return CensusResult(0, 2, 0, 2)
    return CensusResult(k, ends, (k - ends) // 2, 1)
