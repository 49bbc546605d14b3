"""Points on S^3 and S^2, the Hopf map, and fiber arithmetic.

S^3 lives in C^2 as pairs (a, b) with |a|^2 + |b|^2 = 1; S^2 lives in
R x C as pairs (xi, eta) with xi^2 + |eta|^2 = 1.  The fibration

    (a, b) -> (|a|^2 - |b|^2, 2 a conj(b))

collapses each circle {(a z, b z) : |z| = 1} to one base point.  Everything
here is a pure function on immutable values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "SpherePoint2",
    "SpherePoint3",
    "TAU_UNIT",
    "TAU_RENORM",
    "TAU_CHART",
    "TAU_FIBER",
    "principal_angle",
    "hopf_map",
    "fiber_multiply",
    "fiber_section",
    "fiber_angle",
]

# Membership tolerance for "is on the sphere".
TAU_UNIT = 1e-9
# Constructors renormalize inputs within this distance of unit norm, reject beyond.
TAU_RENORM = 1e-6
# Switch to the xi = -1 branch of fiber_section inside this distance of the pole.
TAU_CHART = 1e-8
# Two points count as lying on the same fiber when their base points are this close.
TAU_FIBER = 1e-8

_TWO_PI = 2.0 * math.pi


def principal_angle(x: float) -> float:
    """Reduce an angle to the interval (-pi, pi]."""
    y = math.remainder(x, _TWO_PI)
    if y <= -math.pi:
        y = math.pi
    return y


def _renormalize(norm_sq: float, what: str) -> float:
    """Return the 1/norm factor, rejecting points too far off the sphere."""
    norm = math.sqrt(norm_sq)
    if abs(norm - 1.0) > TAU_RENORM:
        raise DomainError(f"{what} has norm {norm!r}, beyond renormalization tolerance {TAU_RENORM}")
    return 1.0 / norm


@dataclass(frozen=True)
class SpherePoint3:
    """Point (a, b) on the unit sphere of C^2."""

    a: complex
    b: complex

    def __post_init__(self):
        scale = _renormalize(abs(self.a) ** 2 + abs(self.b) ** 2, "S^3 point")
        if scale != 1.0:
            object.__setattr__(self, "a", self.a * scale)
            object.__setattr__(self, "b", self.b * scale)

    @classmethod
    def from_r4(cls, x) -> "SpherePoint3":
        """Build from real coordinates (x1, x2, x3, x4) ~ (x1+ix2, x3+ix4)."""
        x = np.asarray(x, dtype=float)
        return cls(complex(x[0], x[1]), complex(x[2], x[3]))

    def to_r4(self) -> np.ndarray:
        return np.array([self.a.real, self.a.imag, self.b.real, self.b.imag])


@dataclass(frozen=True)
class SpherePoint2:
    """Point (xi, eta) on the unit sphere of R x C."""

    xi: float
    eta: complex

    def __post_init__(self):
        scale = _renormalize(self.xi**2 + abs(self.eta) ** 2, "S^2 point")
        if scale != 1.0:
            object.__setattr__(self, "xi", self.xi * scale)
            object.__setattr__(self, "eta", self.eta * scale)

    @classmethod
    def from_r3(cls, x) -> "SpherePoint2":
        """Build from real coordinates (xi, Re eta, Im eta)."""
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), complex(x[1], x[2]))

    def to_r3(self) -> np.ndarray:
        return np.array([self.xi, self.eta.real, self.eta.imag])


def _check_unit(norm_sq: float, what: str) -> None:
    if abs(norm_sq - 1.0) > 2.0 * TAU_UNIT:
        raise DomainError(f"{what} is off the unit sphere: |.|^2 = {norm_sq!r}")


def hopf_map(p: SpherePoint3) -> SpherePoint2:
    """Project (a, b) to (|a|^2 - |b|^2, 2 a conj(b))."""
    _check_unit(abs(p.a) ** 2 + abs(p.b) ** 2, "hopf_map input")
    return SpherePoint2(abs(p.a) ** 2 - abs(p.b) ** 2, 2.0 * p.a * p.b.conjugate())


def fiber_multiply(p: SpherePoint3, zeta: complex) -> SpherePoint3:
    """Move p along its fiber: (a, b) -> (a zeta, b zeta) for unit zeta."""
    if abs(abs(zeta) - 1.0) > TAU_RENORM:
        raise DomainError(f"fiber factor has modulus {abs(zeta)!r}, expected 1")
    zeta = zeta / abs(zeta)
    return SpherePoint3(p.a * zeta, p.b * zeta)


def fiber_section(w: SpherePoint2) -> SpherePoint3:
    """A point of the fiber over w, smooth away from the pole xi = -1.

    Returns (sqrt(1+xi), conj(eta)/sqrt(1+xi)) / sqrt(2); at (and within
    TAU_CHART of) the pole the exact preimage (0, 1) is used instead.
    """
    if w.xi <= -1.0 + TAU_CHART:
        return SpherePoint3(0.0, 1.0)
    root = math.sqrt(1.0 + w.xi)
    return SpherePoint3(complex(root / math.sqrt(2.0)), w.eta.conjugate() / (root * math.sqrt(2.0)))


def fiber_angle(base: SpherePoint3, q: SpherePoint3) -> float:
    """Angle zeta in (-pi, pi] with q = base * e^{i zeta}.

    Both points must lie on the same fiber (base points within TAU_FIBER).
    """
    wb = hopf_map(base).to_r3()
    wq = hopf_map(q).to_r3()
    gap = float(np.linalg.norm(wb - wq))
    if gap > TAU_FIBER:
        raise DomainError(f"points lie on different fibers (base-point gap {gap:.3e})")
    inner = q.a * base.a.conjugate() + q.b * base.b.conjugate()
    return principal_angle(cmath.phase(inner))
