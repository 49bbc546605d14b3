"""Horizontal lifting of S^2 curves to S^3, holonomy, and generator phases.

The lift solves the non-autonomous ODE beta' = H(beta, alpha'(s)), where
H(x, v) is the unique tangent vector at x that is complex-orthogonal to x
(no fiber component) and pushes forward to v under the fibration.  A closed
base curve generally lifts to an open curve; the endpoint mismatch along the
fiber is the holonomy, and correcting it by the best (t+1)-th root of unity
drawn from the cyclic group's generators yields the residual phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import PiecewiseCurve, arc_length, hermite_segment, segment_quadrature
from .errors import DomainError, NumericError
from .hopf import (
    TAU_FIBER,
    SpherePoint3,
    fiber_angle,
    hopf_map,
    principal_angle,
)

__all__ = [
    "LiftResult",
    "HolonomyResult",
    "horizontal_lift",
    "holonomy",
    "generators",
    "generator_bound",
    "enclosed_area_check",
]

# Endpoint agreement between successive step-doubled integrations.
DRIFT_TOL = 1e-10
_MAX_STEPS_PER_UNIT = 1 << 17


@dataclass(frozen=True)
class LiftResult:
    """Horizontal lift of a closed S^2 curve: open curve on S^3 plus bookkeeping."""

    beta: PiecewiseCurve
    start_point: SpherePoint3
    lift_length: float
    diagnostics: dict


@dataclass(frozen=True)
class HolonomyResult:
    """Fiber phase data of a lift endpoint: raw angle, chosen generator, residual."""

    holonomy_angle: float
    generator: int
    residual_phase: float


def _horizontal_velocity(a: complex, b: complex, dv: np.ndarray) -> tuple[complex, complex]:
    """Tangent at (a, b) with no fiber component pushing forward to dv on S^2."""
    e1a = -b.conjugate()
    e1b = a.conjugate()
    z = (a * b).conjugate()
    p = a * a
    q = e1a * e1a  # = conj(b)^2
    diff = p - q
    summ = p + q
    # Images of the horizontal basis (e1, i e1) under the fibration differential.
    u1 = (-4.0 * z.real, 2.0 * diff.real, 2.0 * diff.imag)
    u2 = (4.0 * z.imag, 2.0 * summ.imag, -2.0 * summ.real)
    g11 = u1[0] * u1[0] + u1[1] * u1[1] + u1[2] * u1[2]
    g22 = u2[0] * u2[0] + u2[1] * u2[1] + u2[2] * u2[2]
    g12 = u1[0] * u2[0] + u1[1] * u2[1] + u1[2] * u2[2]
    r1 = dv[0] * u1[0] + dv[1] * u1[1] + dv[2] * u1[2]
    r2 = dv[0] * u2[0] + dv[1] * u2[1] + dv[2] * u2[2]
    det = g11 * g22 - g12 * g12
    if det < 1e-12:
        raise NumericError("horizontal frame degenerated", {"det": det})
    lam = complex((g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det)
    return lam * e1a, lam * e1b


def _integrate_segment(seg, a: complex, b: complex, n_steps: int):
    """Fixed-step RK4 over one smooth segment with per-step renormalization.

    Returns endpoint state plus Hermite knot data (parameters, points (m,4),
    velocities (m,4)) sampled at the renormalized step points.
    """
    h = (seg.s_hi - seg.s_lo) / n_steps
    s_grid = seg.s_lo + h * np.arange(n_steps + 1)
    s_half = seg.s_lo + h * (np.arange(n_steps) + 0.5)
    _, vel_grid = seg.func(s_grid)
    _, vel_half = seg.func(s_half)

    pts = np.empty((n_steps + 1, 4))
    vels = np.empty((n_steps + 1, 4))

    def record(i, a, b, fa, fb):
        pts[i, 0], pts[i, 1], pts[i, 2], pts[i, 3] = a.real, a.imag, b.real, b.imag
        vels[i, 0], vels[i, 1], vels[i, 2], vels[i, 3] = fa.real, fa.imag, fb.real, fb.imag

    fa, fb = _horizontal_velocity(a, b, vel_grid[0])
    record(0, a, b, fa, fb)
    for i in range(n_steps):
        k1a, k1b = fa, fb
        k2a, k2b = _horizontal_velocity(a + 0.5 * h * k1a, b + 0.5 * h * k1b, vel_half[i])
        k3a, k3b = _horizontal_velocity(a + 0.5 * h * k2a, b + 0.5 * h * k2b, vel_half[i])
        k4a, k4b = _horizontal_velocity(a + h * k3a, b + h * k3b, vel_grid[i + 1])
        a = a + (h / 6.0) * (k1a + 2.0 * (k2a + k3a) + k4a)
        b = b + (h / 6.0) * (k1b + 2.0 * (k2b + k3b) + k4b)
        norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        a /= norm
        b /= norm
        fa, fb = _horizontal_velocity(a, b, vel_grid[i + 1])
        record(i + 1, a, b, fa, fb)
    return a, b, s_grid, pts, vels


def horizontal_lift(alpha: PiecewiseCurve, start: SpherePoint3) -> LiftResult:
    """Lift a closed S^2 curve to the horizontal curve on S^3 through `start`.

    The step count per segment doubles until the curve endpoint moves by less
    than DRIFT_TOL between refinements; the finest run's step data becomes the
    dense cubic-Hermite representation of the lift.
    """
    if alpha.ambient_dim != 3:
        raise DomainError("horizontal lift expects a curve in R^3")
    base0, _ = alpha.point_velocity(0.0)
    gap = float(np.linalg.norm(hopf_map(start).to_r3() - base0[0]))
    if gap > TAU_FIBER:
        raise DomainError(f"start point lies over base-point gap {gap:.3e}, not on the fiber")

    steps_per_unit = 512
    previous_end = None
    drift = math.inf
    while True:
        a, b = start.a, start.b
        segment_data = []
        for seg in alpha.segments:
            n = max(32, math.ceil(steps_per_unit * (seg.s_hi - seg.s_lo)))
            a, b, s_grid, pts, vels = _integrate_segment(seg, a, b, n)
            segment_data.append((seg, s_grid, pts, vels))
        end = np.array([a.real, a.imag, b.real, b.imag])
        if previous_end is not None:
            drift = float(np.linalg.norm(end - previous_end))
            if drift < DRIFT_TOL:
                break
        previous_end = end
        if steps_per_unit >= _MAX_STEPS_PER_UNIT:
            raise NumericError(
                "lift integrator did not reach endpoint tolerance",
                {"steps_per_unit": steps_per_unit, "drift": drift},
            )
        steps_per_unit *= 2

    beta_segments = [
        hermite_segment(s_grid, pts, vels, oscillation=seg.oscillation)
        for seg, s_grid, pts, vels in segment_data
    ]
    beta = PiecewiseCurve(beta_segments, ambient_dim=4, closed=False)
    return LiftResult(
        beta=beta,
        start_point=start,
        lift_length=arc_length(beta),
        diagnostics={"steps_per_unit": steps_per_unit, "endpoint_drift": drift},
    )


def _endpoint(beta: PiecewiseCurve, s: float) -> SpherePoint3:
    pos, _ = beta.point_velocity(s)
    return SpherePoint3.from_r4(pos[0])


def generators(n: int) -> set[int]:
    """Generators of the cyclic group of order n: units modulo n."""
    if n < 2:
        raise DomainError(f"cyclic group order must be at least 2, got {n}")
    return {k for k in range(1, n) if math.gcd(k, n) == 1}


def generator_bound(t: int) -> float:
    """Worst-case residual phase over generator choices, for t > 2.

    The phases reachable by generator corrections are {2 pi g / (t+1)}; the
    residual phase can never exceed half the widest circular gap between
    consecutive reachable phases.  Equals 2 pi / (t+1) whenever t+1 is prime.
    """
    if t <= 2:
        raise DomainError("the generator bound is stated for t > 2")
    gens = sorted(generators(t + 1))
    gaps = [b - a for a, b in zip(gens, gens[1:])]
    gaps.append(gens[0] + (t + 1) - gens[-1])
    return math.pi / (t + 1) * max(gaps)


def holonomy(lift: LiftResult, t: int) -> HolonomyResult:
    """Endpoint fiber angle of the lift and the best generator correction.

    Picks g among the generators of the order-(t+1) cyclic group minimizing
    |holonomy + 2 pi g / (t+1)| reduced to (-pi, pi]; ties (within 1e-9, so
    floating-point noise cannot flip the choice) go to the smallest g.
    """
    if t < 1:
        raise DomainError("degree must be a positive integer")
    beta0 = _endpoint(lift.beta, 0.0)
    beta1 = _endpoint(lift.beta, 1.0)
    angle = fiber_angle(beta1, beta0)
    best_g, best_phase = None, None
    for g in sorted(generators(t + 1)):
        phase = principal_angle(angle + 2.0 * math.pi * g / (t + 1))
        if best_phase is None or abs(phase) < abs(best_phase) - 1e-9:
            best_g, best_phase = g, phase
    return HolonomyResult(holonomy_angle=angle, generator=best_g, residual_phase=best_phase)


def enclosed_area_check(alpha: PiecewiseCurve, lift: LiftResult) -> float:
    """Distance (mod 2 pi) of the lift holonomy from minus half the enclosed area.

    The signed spherical area on the first-pole side of a simple closed curve
    is the line integral of Im(conj(eta) eta') / (1 + xi).
    """
    from .curves import self_intersection_parameters

    crossings = alpha.declared_self_intersections
    if crossings is None:
        crossings = self_intersection_parameters(alpha, tol=1e-7)
    if crossings:
        raise DomainError("enclosed area is defined for simple curves only")

    def integrand(s, pos, vel):
        eta_re, eta_im = pos[:, 1], pos[:, 2]
        deta_re, deta_im = vel[:, 1], vel[:, 2]
        return (eta_re * deta_im - eta_im * deta_re) / (1.0 + pos[:, 0])

    area = sum(
        segment_quadrature(seg, integrand, tol=1e-12, initial_nodes=max(16, math.ceil(4 * seg.oscillation)))
        for seg in alpha.segments
    )
    angle = fiber_angle(_endpoint(lift.beta, 1.0), _endpoint(lift.beta, 0.0))
    return abs(principal_angle(angle + 0.5 * area))
