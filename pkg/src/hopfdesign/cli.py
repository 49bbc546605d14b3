"""Command-line front end: curve generation, lifting, stitching, certification.

Exit codes: 0 success, 2 parse/input error, 3 numeric error, 4 verification
fail, 5 offset selection exhausted.  Every failure prints one line of the
form `E_<CODE>: detail` to stderr.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys

import click
import numpy as np

from . import catalog
from .curves import arc_length
from .curve_io import build_curve, describe_curve, describe_stitched, parse_curve, serialize_curve
from .errors import (
    ConstructionError,
    DomainError,
    HopfDesignError,
    NumericError,
    ParseError,
    SelectionExhaustedError,
)
from .hopf import SpherePoint2, SpherePoint3, fiber_section
from .lift import enclosed_area_check, generator_bound, holonomy, horizontal_lift
from .stitch import DEFAULT_SEED, ensure_constant_speed, stitch_curve
from .verify import (
    average_exchange_check,
    certify,
    degree_halving_check,
    polygon_design_check,
    random_polynomial,
)

_EXIT_PARSE = 2
_EXIT_NUMERIC = 3
_EXIT_VERIFY = 4
_EXIT_SELECTION = 5


def _bail(code: str, exit_code: int, exc: Exception) -> None:
    click.echo(f"{code}: {exc}", err=True)
    sys.exit(exit_code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as exc:
            _bail("E_PARSE", _EXIT_PARSE, exc)
        except DomainError as exc:
            _bail("E_DOMAIN", _EXIT_PARSE, exc)
        except SelectionExhaustedError as exc:
            _bail("E_SELECTION", _EXIT_SELECTION, exc)
        except (NumericError, ConstructionError) as exc:
            _bail("E_NUMERIC", _EXIT_NUMERIC, exc)
        except HopfDesignError as exc:
            _bail("E_NUMERIC", _EXIT_NUMERIC, exc)

    return wrapper


def _load_curve(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        desc = parse_curve(fh.read())
    return desc, build_curve(desc)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_report(path: str, payload: dict) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


@click.group()
def cli():
    """Design curves on spheres and tori: build, lift, stitch, certify."""


@cli.command()
@click.option("--name", type=click.Choice(["equator", "s3-explicit", "torus"]), required=True)
@click.option("--t", "degree", type=int, default=None, help="degree parameter")
@click.option("--d", "factors", type=int, default=2, help="circle factors (torus only)")
@click.option("--out", type=click.Path(), required=True)
@_guarded
def example(name, degree, factors, out):
    """Write one of the built-in curves to a curve file."""
    if name == "equator":
        curve = catalog.equator_curve()
        label = "equator"
    elif name == "s3-explicit":
        if degree is None:
            raise DomainError("s3-explicit needs --t")
        curve = catalog.explicit_s3_curve(degree)
        label = f"s3-explicit-t{degree}"
    else:
        if degree is None:
            raise DomainError("torus needs --t")
        curve = catalog.torus_curve(degree, factors)
        label = f"torus-t{degree}-d{factors}"
    _write_text(out, serialize_curve(describe_curve(curve, name=label)))
    click.echo(f"wrote {label} to {out}")


def _parse_start(text: str) -> SpherePoint3:
    parts = text.split(",")
    if len(parts) != 4:
        raise DomainError("--start needs four comma-separated numbers: a_re,a_im,b_re,b_im")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise DomainError(f"--start is not numeric: {exc}") from None
    return SpherePoint3(complex(values[0], values[1]), complex(values[2], values[3]))


@cli.command("lift")
@click.option("--alpha", "alpha_path", type=click.Path(exists=True), required=True)
@click.option("--start", type=str, default=None, help="a_re,a_im,b_re,b_im on the start fiber")
@click.option("--t", "degree", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@_guarded
def lift_command(alpha_path, start, degree, out, report_path):
    """Horizontally lift a closed S^2 curve and report its holonomy data."""
    desc, alpha = _load_curve(alpha_path)
    if alpha.ambient_dim != 3:
        raise DomainError(f"lift expects an S^2 curve, got ambient_dim {alpha.ambient_dim}")
    alpha = ensure_constant_speed(alpha)
    if start is None:
        base0, _ = alpha.point_velocity(0.0)
        start_point = fiber_section(SpherePoint2.from_r3(base0[0]))
    else:
        start_point = _parse_start(start)
    result = horizontal_lift(alpha, start_point)
    hol = holonomy(result, degree)
    bound = generator_bound(degree) if degree > 2 else None

    _write_text(out, serialize_curve(describe_curve(result.beta, name=f"lift-of-{desc.name}")))
    report = {
        "alpha": {"file": alpha_path, "name": desc.name, "length": arc_length(alpha)},
        "t": degree,
        "start": [start_point.a.real, start_point.a.imag, start_point.b.real, start_point.b.imag],
        "holonomy_angle": hol.holonomy_angle,
        "generator": hol.generator,
        "residual_phase": hol.residual_phase,
        "lift_length": result.lift_length,
        "generator_bound": bound,
        "settings": result.diagnostics,
        "seed": None,
    }
    _write_report(report_path, report)
    click.echo(
        f"holonomy {hol.holonomy_angle:+.12f}, generator {hol.generator}, "
        f"residual phase {hol.residual_phase:+.12f}, lift length {result.lift_length:.12f}"
    )


@cli.command()
@click.option("--alpha", "alpha_path", type=click.Path(exists=True), required=True)
@click.option("--t", "degree", type=int, required=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@_guarded
def stitch(alpha_path, degree, epsilon, seed, out, report_path):
    """Build the degree-t stitched curve on S^3 from a closed S^2 curve."""
    desc, alpha = _load_curve(alpha_path)
    if alpha.ambient_dim != 3:
        raise DomainError(f"stitch expects an S^2 curve, got ambient_dim {alpha.ambient_dim}")
    stitched = stitch_curve(alpha, degree, epsilon, seed=seed)
    measured = arc_length(stitched.gamma)
    _write_text(
        out, serialize_curve(describe_stitched(stitched, name=f"stitched-t{degree}-{desc.name}"))
    )
    plan = stitched.plan
    report = {
        "alpha": {"file": alpha_path, "name": desc.name},
        "t": degree,
        "epsilon": epsilon,
        "seed": seed,
        "generator": plan.generator,
        "holonomy_angle": plan.holonomy_angle,
        "residual_phase": plan.residual_phase,
        "slope_magnitude": plan.slope_magnitude,
        "lift_length": plan.lift_length,
        "partition": list(plan.partition),
        "delta": plan.delta,
        "max_offset": plan.max_offset,
        "claimed_length": stitched.claimed_length,
        "measured_length": measured,
    }
    _write_report(report_path, report)
    click.echo(
        f"stitched degree-{degree} curve: length {measured:.12f} "
        f"(claimed {stitched.claimed_length:.12f})"
    )


@cli.command()
@click.option("--curve", "curve_path", type=click.Path(exists=True), required=True)
@click.option("--t", "degree", type=int, required=True)
@click.option("--space", type=click.Choice(["s2", "s3", "torus"]), required=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@_guarded
def verify(curve_path, degree, space, tol, report_path):
    """Certify the design property of a curve at the given degree."""
    desc, curve = _load_curve(curve_path)
    expected_dim = {"s2": 3, "s3": 4}.get(space)
    if expected_dim is not None and curve.ambient_dim != expected_dim:
        raise DomainError(
            f"space {space} needs ambient_dim {expected_dim}, curve has {curve.ambient_dim}"
        )
    target = "torus" if space == "torus" else "sphere"
    cert = certify(curve, degree, target, tol=tol)
    report = {"curve": {"file": curve_path, "name": desc.name}, "seed": None}
    report.update(cert.to_dict())
    _write_report(report_path, report)
    worst_a, worst_r = cert.worst_monomial()
    if not cert.verdict:
        click.echo(
            f"E_VERIFY: max residual {cert.max_residual:.3e} exceeds {tol:.1e} "
            f"(monomial exponents {list(worst_a)})",
            err=True,
        )
        sys.exit(_EXIT_VERIFY)
    click.echo(
        f"pass: degree {degree}, max residual {cert.max_residual:.3e} < {tol:.1e}, "
        f"length {cert.curve_length:.12f}"
    )


@cli.command()
@click.option("--curve", "curve_path", type=click.Path(exists=True), required=True)
@click.option("--samples", type=int, required=True)
@click.option("--format", "fmt", type=click.Choice(["csv"]), default="csv", show_default=True)
@click.option("--projection", type=click.Choice(["stereographic"]), default=None)
@click.option("--out", type=click.Path(), default="-", show_default=True)
@_guarded
def export(curve_path, samples, fmt, projection, out):
    """Sample a curve to CSV; N samples give N+1 rows closing the loop."""
    _, curve = _load_curve(curve_path)
    if samples < 1:
        raise DomainError("--samples must be positive")
    s_values = np.linspace(0.0, 1.0, samples + 1)
    pos, _ = curve.point_velocity(s_values)

    if projection == "stereographic":
        if curve.ambient_dim != 4:
            raise DomainError("stereographic projection expects a curve on S^3")
        denom = 1.0 + pos[:, 3]
        if np.min(np.abs(denom)) < 1e-12:
            raise NumericError("curve passes through the projection pole (0,0,0,-1)")
        rows = pos[:, :3] / denom[:, None]
        header = ["s", "x", "y", "z"]
    else:
        rows = pos
        header = ["s"] + [f"x{i + 1}" for i in range(curve.ambient_dim)]

    sink = sys.stdout if out == "-" else open(out, "w", encoding="utf-8", newline="")
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(header)
        for s, row in zip(s_values, rows):
            writer.writerow([repr(float(s))] + [repr(float(v)) for v in row])
    finally:
        if sink is not sys.stdout:
            sink.close()
    if out != "-":
        click.echo(f"wrote {samples + 1} rows to {out}")


@cli.command()
@click.option("--t", "degree", type=int, required=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_guarded
def lemmas(degree, seed):
    """Numerically exercise the supporting identities and print residuals."""
    if degree < 1:
        raise DomainError("--t must be positive")
    rng = np.random.default_rng(seed)

    worst = 0.0
    for _ in range(5):
        v = rng.normal(size=4)
        omega = SpherePoint3.from_r4(v / np.linalg.norm(v))
        poly = random_polynomial(4, degree, rng)
        worst = max(worst, polygon_design_check(omega, degree, poly))
    click.echo(f"fiber polygon vs fiber average   (degree {degree}): {worst:.3e}")

    worst = max(average_exchange_check(random_polynomial(4, degree, rng)) for _ in range(5))
    click.echo(f"base-average exchange            (degree {degree}): {worst:.3e}")

    click.echo(f"fiber-average degree halving     (degree {degree}): {degree_halving_check(degree, seed=seed):.3e}")

    for label, curve, area in (
        ("equator", catalog.equator_curve(), 2.0 * math.pi),
        ("latitude 0.8 rad", catalog.latitude_circle(0.8), 2.0 * math.pi * (1.0 - math.cos(0.8))),
    ):
        base0, _ = curve.point_velocity(0.0)
        lifted = horizontal_lift(curve, fiber_section(SpherePoint2.from_r3(base0[0])))
        residual = enclosed_area_check(curve, lifted)
        click.echo(f"holonomy vs enclosed area ({label}, cap area {area:.6f}): {residual:.3e}")


def main():
    cli()


if __name__ == "__main__":
    main()
