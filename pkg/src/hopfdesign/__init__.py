"""Design curves on S^3 and tori: construction, lifting, and certification."""

from .catalog import (
    equator_curve,
    explicit_s3_curve,
    latitude_circle,
    product_curve,
    torus_curve,
    winding_torus_curve,
)
from .curves import (
    PiecewiseCurve,
    Segment,
    arc_length,
    evaluate,
    reparameterize_constant_speed,
    self_intersection_parameters,
)
from .hopf import (
    SpherePoint2,
    SpherePoint3,
    fiber_angle,
    fiber_multiply,
    fiber_section,
    hopf_map,
)
from .lift import (
    HolonomyResult,
    LiftResult,
    enclosed_area_check,
    generator_bound,
    generators,
    holonomy,
    horizontal_lift,
)
from .stitch import (
    PhaseProfile,
    StitchedCurve,
    StitchPlan,
    assemble,
    build_plan,
    build_theta,
    select_delta,
    stitch_curve,
)
from .verify import (
    DesignCertificate,
    MonomialBasis,
    Polynomial,
    average_exchange_check,
    certify,
    curve_average,
    degree_halving_check,
    design_chain_residual,
    fiber_average,
    polygon_design_check,
    random_polynomial,
    sphere_monomial_average,
    torus_monomial_average,
)

__version__ = "0.1.0"
