"""Shared fixtures: reference curves and cached expensive constructions."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hopfdesign.curves import PiecewiseCurve, analytic_segment
from hopfdesign.hopf import SpherePoint2, SpherePoint3, fiber_section
from hopfdesign.catalog import equator_curve
from hopfdesign.lift import horizontal_lift
from hopfdesign.stitch import stitch_curve


def make_figure_eight() -> PiecewiseCurve:
    """Closed analytic curve on S^2 with exactly one transversal self-crossing.

    A planar figure-eight (A sin 4 pi u, B sin 2 pi u) pushed onto the sphere
    through the gnomonic chart at (0, 0, 1); it meets itself only at the chart
    center, at parameters 0 and 1/2.
    """
    amp_x, amp_y = 0.6, 0.9

    def flat(u):
        return np.stack(
            [amp_x * np.sin(4 * np.pi * u), amp_y * np.sin(2 * np.pi * u), np.ones_like(u)],
            axis=1,
        )

    def dflat(u):
        return np.stack(
            [
                4 * np.pi * amp_x * np.cos(4 * np.pi * u),
                2 * np.pi * amp_y * np.cos(2 * np.pi * u),
                np.zeros_like(u),
            ],
            axis=1,
        )

    def position(u):
        q = flat(u)
        return q / np.linalg.norm(q, axis=1, keepdims=True)

    def velocity(u):
        q, dq = flat(u), dflat(u)
        norm = np.linalg.norm(q, axis=1, keepdims=True)
        radial = np.sum(q * dq, axis=1, keepdims=True)
        return dq / norm - q * radial / norm**3

    seg = analytic_segment(position, velocity, oscillation=2.0)
    return PiecewiseCurve([seg], ambient_dim=3)


def make_speed_profile_circle() -> PiecewiseCurve:
    """The equator traversed with speed 2 pi (1 + cos(2 pi s) / 2)."""

    def warp(s):
        return s + np.sin(2 * np.pi * s) / (4 * np.pi)

    def dwarp(s):
        return 1.0 + 0.5 * np.cos(2 * np.pi * s)

    def position(s):
        phase = 2 * np.pi * warp(s)
        return np.stack([np.zeros_like(s), np.cos(phase), np.sin(phase)], axis=1)

    def velocity(s):
        phase = 2 * np.pi * warp(s)
        rate = 2 * np.pi * dwarp(s)
        return np.stack([np.zeros_like(s), -rate * np.sin(phase), rate * np.cos(phase)], axis=1)

    seg = analytic_segment(position, velocity, oscillation=1.0)
    return PiecewiseCurve([seg], ambient_dim=3)


def section_start(curve: PiecewiseCurve) -> SpherePoint3:
    base0, _ = curve.point_velocity(0.0)
    return fiber_section(SpherePoint2.from_r3(base0[0]))


@pytest.fixture(scope="session")
def figure_eight():
    return make_figure_eight()


@pytest.fixture(scope="session")
def equator():
    return equator_curve()


@pytest.fixture(scope="session")
def equator_lift(equator):
    return horizontal_lift(
        equator, SpherePoint3(complex(1 / math.sqrt(2)), complex(1 / math.sqrt(2)))
    )


@pytest.fixture(scope="session")
def stitched_cache(equator):
    """Memoized stitched curves from the equator, keyed by (t, epsilon)."""
    cache = {}

    def get(t: int, epsilon: float):
        key = (t, epsilon)
        if key not in cache:
            cache[key] = stitch_curve(equator, t, epsilon)
        return cache[key]

    return get
