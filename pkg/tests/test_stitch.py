"""Stitching: plans, phase profiles, assembly, offset selection."""

import math

import numpy as np
import pytest

from hopfdesign.catalog import explicit_s3_curve, latitude_circle
from hopfdesign.curves import PiecewiseCurve, arc_length, self_intersection_parameters
from hopfdesign.errors import DomainError, NumericError
from hopfdesign.hopf import SpherePoint3, fiber_angle
from hopfdesign.lift import horizontal_lift
from hopfdesign.stitch import (
    StitchPlan,
    _candidate_collisions,
    assemble,
    build_plan,
    build_theta,
    candidate_parameters,
    select_delta,
    stitch_curve,
)

from conftest import section_start


def synthetic_plan(**overrides):
    base = dict(
        t=3,
        epsilon=0.0,
        residual_phase=math.pi / 2,
        slope_magnitude=math.pi / 2,
        generator=1,
        holonomy_angle=math.pi,
        lift_length=math.pi,
        partition=(0.0, 1.0),
        turn_points=(1.0,),
        delta=0.0,
        max_offset=0.0,
    )
    base.update(overrides)
    return StitchPlan(**base)


def test_build_plan_equator_t3_eps0(equator):
    plan, lift = build_plan(equator, 3, 0.0)
    assert plan.partition == (0.0, 1.0)
    assert abs(plan.slope_magnitude - math.pi / 2) < 1e-9
    assert abs(abs(plan.residual_phase) - math.pi / 2) < 1e-9
    assert plan.delta == 0.0
    # r_{1,0} = (1 + sign) / 2: the residual phase is negative here.
    assert abs(plan.turn_points[0] - 0.0) < 1e-9


def test_build_plan_equator_t3_eps1(equator):
    plan, _ = build_plan(equator, 3, 1.0)
    expect = math.sqrt(
        math.pi**2 / 4 + math.sqrt(math.pi**2 + math.pi**2 / 4) / 2 + 1.0 / 16.0
    )
    assert abs(plan.slope_magnitude - expect) < 1e-9


def test_build_plan_slope_identity(equator):
    for t, eps in ((2, 0.3), (3, 1.7), (5, 0.0)):
        plan, _ = build_plan(equator, t, eps)
        lhs = plan.slope_magnitude**2
        rhs = (
            plan.residual_phase**2
            + 2 * eps * math.sqrt(plan.lift_length**2 + plan.residual_phase**2) / (t + 1)
            + eps**2 / (t + 1) ** 2
        )
        assert abs(lhs - rhs) < 1e-12


def test_build_plan_rejects_bad_degree_and_epsilon(equator):
    with pytest.raises(DomainError):
        build_plan(equator, 0, 0.0)
    with pytest.raises(DomainError):
        build_plan(equator, 3, -0.5)


def test_build_plan_figure_eight_partition(figure_eight):
    plan, _ = build_plan(figure_eight, 3, 0.2)
    assert len(plan.partition) == 3
    assert abs(plan.partition[1] - 0.5) < 1e-4  # crossing parameters survive reparam
    assert plan.max_offset > 0.0
    assert 0.0 < plan.delta <= plan.max_offset
    for j, r in enumerate(plan.turn_points, start=1):
        assert plan.partition[j - 1] <= r <= plan.partition[j]


def test_build_theta_single_positive_slope():
    theta = build_theta(synthetic_plan())
    s = np.linspace(0.0, 1.0, 101)
    assert np.max(np.abs(theta(s) - (math.pi / 2) * s)) < 1e-12


def test_build_theta_zero_phase():
    theta = build_theta(
        synthetic_plan(residual_phase=0.0, slope_magnitude=0.0, turn_points=(0.5,))
    )
    s = np.linspace(0.0, 1.0, 101)
    assert np.max(np.abs(theta(s))) == 0.0


def test_build_theta_zero_slope_nonzero_phase_is_inconsistent():
    with pytest.raises(NumericError):
        build_theta(synthetic_plan(slope_magnitude=0.0))


def test_build_theta_interior_breakpoint_identity(figure_eight):
    plan, lift = build_plan(figure_eight, 3, 0.2)
    theta = build_theta(plan)
    phi, phi_eps = plan.residual_phase, plan.slope_magnitude
    for j, s_j in enumerate(plan.partition[:-1]):
        expect = s_j * phi + 2 * j * plan.delta * phi_eps
        assert abs(theta(np.array([s_j]))[0] - expect) < 1e-10
    assert abs(theta(np.array([1.0]))[0] - phi) < 1e-10


@pytest.mark.parametrize("t", [2, 3])
def test_assemble_equator_reproduces_explicit_curve(t, equator, stitched_cache):
    stitched = stitched_cache(t, 0.0)
    expect = math.pi * math.sqrt(2 * t * t + 2)
    assert abs(arc_length(stitched.gamma) - expect) < 1e-7 * expect
    assert abs(stitched.claimed_length - expect) < 1e-8

    s = np.linspace(0.0, 1.0, 4001)
    got, _ = stitched.gamma.point_velocity(s)
    want, _ = explicit_s3_curve(t).point_velocity(s)
    assert np.max(np.linalg.norm(got - want, axis=1)) < 1e-7


def test_assemble_projects_to_compressed_base(equator, stitched_cache):
    stitched = stitched_cache(3, 0.0)
    s = np.linspace(0.0, 1.0, 4001)
    pos, _ = stitched.gamma.point_velocity(s)
    a = pos[:, 0] + 1j * pos[:, 1]
    b = pos[:, 2] + 1j * pos[:, 3]
    xi = np.abs(a) ** 2 - np.abs(b) ** 2
    eta = 2 * a * np.conj(b)
    r = 4 * s - np.floor(4 * s)
    base, _ = equator.point_velocity(r)
    gap = np.sqrt(
        (xi - base[:, 0]) ** 2 + (eta.real - base[:, 1]) ** 2 + (eta.imag - base[:, 2]) ** 2
    )
    assert np.max(gap) < 1e-8


@pytest.mark.parametrize("t,eps", [(2, 0.0), (3, 0.0), (3, 0.1), (3, 1.0)])
def test_assembled_speed_identity(t, eps, stitched_cache):
    stitched = stitched_cache(t, eps)
    plan = stitched.plan
    s = np.linspace(0.0, 1.0, 10001)
    _, vel = stitched.gamma.point_velocity(s)
    speeds_sq = np.sum(vel * vel, axis=1)
    expect = (t + 1) ** 2 * (plan.lift_length**2 + plan.slope_magnitude**2)
    assert np.max(np.abs(speeds_sq - expect)) < 1e-6 * expect


def test_assembled_length_formula(stitched_cache):
    for t, eps in ((2, 0.0), (3, 0.0), (3, 0.1), (3, 1.0)):
        stitched = stitched_cache(t, eps)
        plan = stitched.plan
        expect = (t + 1) * math.sqrt(plan.lift_length**2 + plan.residual_phase**2) + eps
        assert abs(arc_length(stitched.gamma) - expect) < 1e-7 * expect


def test_assembled_curve_is_closed(stitched_cache):
    stitched = stitched_cache(3, 0.1)
    p0, _ = stitched.gamma.point_velocity(0.0)
    p1, _ = stitched.gamma.point_velocity(1.0)
    assert np.linalg.norm(p1 - p0) < 1e-9


def test_fiber_polygon_structure(stitched_cache):
    # gamma(s + k/(t+1)) all sit on one fiber, spaced by multiples of 2 pi g/(t+1).
    t = 3
    stitched = stitched_cache(t, 0.0)
    g = stitched.plan.generator
    rng = np.random.default_rng(12)
    for s in rng.uniform(0.0, 1.0 / (t + 1), size=5):
        params = (s + np.arange(t + 1) / (t + 1)) % 1.0
        pos, _ = stitched.gamma.point_velocity(params)
        base = SpherePoint3.from_r4(pos[0])
        for k in range(t + 1):
            angle = fiber_angle(base, SpherePoint3.from_r4(pos[k]))
            expect = (2 * math.pi * g * k / (t + 1)) % (2 * math.pi)
            gap = abs((angle - expect + math.pi) % (2 * math.pi) - math.pi)
            assert gap < 1e-8


def test_theta_zero_case_assembles(equator):
    # With residual phase ~0 at t=3, the profile is flat and copies differ by
    # pure generator rotations: latitude at polar angle pi/3 has holonomy -pi/2.
    alpha = latitude_circle(math.pi / 3)
    stitched = stitch_curve(alpha, 3, 0.0)
    assert abs(stitched.plan.residual_phase) < 1e-9
    expect = 4 * stitched.plan.lift_length
    assert abs(arc_length(stitched.gamma) - expect) < 1e-6 * expect


def test_candidate_count_equator(stitched_cache):
    stitched = stitched_cache(3, 0.1)
    plan = stitched.plan
    raw = [(s + k) / (plan.t + 1) for s in plan.partition for k in range(plan.t + 1)]
    assert len(raw) == (len(plan.partition)) * (plan.t + 1) == 8
    canonical = candidate_parameters(plan)
    assert len(canonical) == 4  # 0 and 1 alias modulo 1


def test_candidate_collision_detector(figure_eight):
    # The raw figure-eight genuinely passes through one point twice; feeding it
    # as a fake stitched curve at its crossing parameters must raise a flag.
    padded_segments = []
    from hopfdesign.curves import Segment

    for seg in figure_eight.segments:

        def func(s, seg=seg):
            pos, vel = seg.func(s)
            zero = np.zeros((s.size, 1))
            return np.concatenate([pos, zero], axis=1), np.concatenate([vel, zero], axis=1)

        padded_segments.append(Segment(seg.s_lo, seg.s_hi, func, oscillation=seg.oscillation))
    padded = PiecewiseCurve(padded_segments, ambient_dim=4)
    plan = synthetic_plan(t=1, partition=(0.0, 0.5, 1.0), turn_points=(0.25, 0.75))
    collisions = _candidate_collisions(padded, plan)
    assert any(abs(a - 0.0) < 1e-9 and abs(b - 0.5) < 1e-9 for a, b in collisions)


def test_select_delta_equator(equator):
    stitched = stitch_curve(equator, 3, 0.1)
    expect = math.pi * math.sqrt(20) + 0.1
    assert abs(arc_length(stitched.gamma) - expect) < 1e-7 * expect
    assert stitched.gamma.declared_self_intersections == ()
    assert self_intersection_parameters(stitched.gamma, tol=1e-9) == []


def test_select_delta_figure_eight(figure_eight):
    stitched = stitch_curve(figure_eight, 3, 0.1)
    plan = stitched.plan
    assert len(plan.partition) == 3
    assert 0.0 < plan.delta <= plan.max_offset
    assert self_intersection_parameters(stitched.gamma, tol=1e-9) == []
    expect = 4 * math.sqrt(plan.lift_length**2 + plan.residual_phase**2) + 0.1
    assert abs(arc_length(stitched.gamma) - expect) < 1e-6 * expect


def test_stitch_seed_determinism(figure_eight):
    a = stitch_curve(figure_eight, 2, 0.3, seed=77)
    b = stitch_curve(figure_eight, 2, 0.3, seed=77)
    assert a.plan.delta == b.plan.delta
    s = np.linspace(0.0, 1.0, 101)
    pa, _ = a.gamma.point_velocity(s)
    pb, _ = b.gamma.point_velocity(s)
    assert np.array_equal(pa, pb)


def test_lift_reuse_in_build_plan(equator):
    lift = horizontal_lift(equator, section_start(equator))
    plan, returned = build_plan(equator, 3, 0.0, lift=lift)
    assert returned is lift
    assert abs(abs(plan.residual_phase) - math.pi / 2) < 1e-9


def test_assemble_closure_failure_diagnostics(equator):
    # A deliberately wrong residual phase cannot close the curve.
    from hopfdesign.errors import ConstructionError
    from hopfdesign.lift import horizontal_lift

    lift = horizontal_lift(equator, section_start(equator))
    bad_plan = synthetic_plan(residual_phase=math.pi / 2, turn_points=(1.0,))
    theta = build_theta(bad_plan)
    with pytest.raises(ConstructionError) as excinfo:
        assemble(bad_plan, theta, lift)
    assert "gap" in excinfo.value.diagnostics


def test_design_chain_holds_for_any_base_curve(figure_eight):
    # The average-transfer identity behind the construction is purely
    # structural: it holds whether or not the base curve is a design curve.
    from hopfdesign.stitch import ensure_constant_speed
    from hopfdesign.verify import design_chain_residual, random_polynomial

    stitched = stitch_curve(figure_eight, 2, 0.0)
    eight_cs = ensure_constant_speed(figure_eight)
    rng = np.random.default_rng(21)
    worst = max(
        design_chain_residual(stitched.gamma, eight_cs, random_polynomial(4, 2, rng))
        for _ in range(5)
    )
    assert worst < 1e-8


def test_fiber_polygon_structure_on_eight(figure_eight):
    stitched = stitch_curve(figure_eight, 2, 0.0)
    g = stitched.plan.generator
    rng = np.random.default_rng(22)
    for s in rng.uniform(0.0, 1.0 / 3.0, size=3):
        params = (s + np.arange(3) / 3.0) % 1.0
        pos, _ = stitched.gamma.point_velocity(params)
        base = SpherePoint3.from_r4(pos[0])
        for k in range(3):
            angle = fiber_angle(base, SpherePoint3.from_r4(pos[k]))
            expect = (2 * math.pi * g * k / 3.0) % (2 * math.pi)
            gap = abs((angle - expect + math.pi) % (2 * math.pi) - math.pi)
            assert gap < 1e-8


def test_random_smooth_base_structural_invariants():
    # A random closed trig-series curve on S^2 exercises the whole pipeline:
    # reparameterization, lift, holonomy, assembly. The structural invariants
    # (closure, speed identity, length formula, base projection) hold for any
    # closed base curve, design or not.
    rng = np.random.default_rng(2718)
    coeffs = rng.normal(scale=0.15, size=(3, 2, 2))  # (axis, harmonic, cos/sin)

    def bundle(u):
        base = np.stack(
            [0.2 + 0.0 * u, np.cos(2 * np.pi * u), np.sin(2 * np.pi * u)], axis=1
        )
        dbase = np.stack(
            [0.0 * u, -2 * np.pi * np.sin(2 * np.pi * u), 2 * np.pi * np.cos(2 * np.pi * u)],
            axis=1,
        )
        for axis in range(3):
            for harmonic in (1, 2):
                c, s_ = coeffs[axis, harmonic - 1]
                ang = 2 * np.pi * harmonic * u
                base[:, axis] += c * np.cos(ang) + s_ * np.sin(ang)
                dbase[:, axis] += 2 * np.pi * harmonic * (-c * np.sin(ang) + s_ * np.cos(ang))
        return base, dbase

    def position(u):
        q, _ = bundle(u)
        return q / np.linalg.norm(q, axis=1, keepdims=True)

    def velocity(u):
        q, dq = bundle(u)
        norm = np.linalg.norm(q, axis=1, keepdims=True)
        radial = np.sum(q * dq, axis=1, keepdims=True)
        return dq / norm - q * radial / norm**3

    from hopfdesign.curves import analytic_segment

    alpha = PiecewiseCurve([analytic_segment(position, velocity, oscillation=2.0)], 3)
    t, eps = 2, 0.25
    st = stitch_curve(alpha, t, eps)
    plan = st.plan

    # Length and speed identities.
    length = arc_length(st.gamma)
    expect = (t + 1) * math.sqrt(plan.lift_length**2 + plan.residual_phase**2) + eps
    assert abs(length - expect) < 1e-6 * expect
    s = np.linspace(0.0, 1.0, 4001)
    _, vel = st.gamma.point_velocity(s)
    speed_sq = np.sum(vel * vel, axis=1)
    target = (t + 1) ** 2 * (plan.lift_length**2 + plan.slope_magnitude**2)
    assert np.max(np.abs(speed_sq - target)) < 1e-6 * target

    # Base projection: hopf(gamma(s)) tracks the compressed base curve.
    from hopfdesign.stitch import ensure_constant_speed

    alpha_cs = ensure_constant_speed(alpha)
    pos, _ = st.gamma.point_velocity(s)
    a = pos[:, 0] + 1j * pos[:, 1]
    b = pos[:, 2] + 1j * pos[:, 3]
    r = (t + 1) * s - np.floor((t + 1) * s)
    base, _ = alpha_cs.point_velocity(r)
    gap = np.sqrt(
        (np.abs(a) ** 2 - np.abs(b) ** 2 - base[:, 0]) ** 2
        + np.abs(2 * a * np.conj(b) - (base[:, 1] + 1j * base[:, 2])) ** 2
    )
    assert np.max(gap) < 1e-7

    # Simplicity for positive extra length.
    assert self_intersection_parameters(st.gamma, tol=1e-9) == []
