"""Finite-time and asymptotic torsion of annulus maps, with executable theorem checks."""
from .curves import (
    EssentialCurve,
    angle_variation,
    circle_curve,
    complexity,
    fourier_loop,
    graph_curve,
    height_argmax,
    is_graph,
    max_height_argmax,
    maxheight_var_zero_check,
    pendulum_level_curve,
    phi,
)
from .errors import (
    ConfigError,
    DegeneracyError,
    DomainError,
    NoBracketError,
    NormalizationError,
    PreconditionError,
    RotationTooFastError,
    StepUnderflowError,
    TorsionLabError,
)
from .geometry import (
    AnnulusPoint,
    PlanePoint,
    TangentVector,
    lift_point,
    nearest_lift,
    oriented_angle,
    project_point,
    unwrap_chain,
    wrap_turns,
)
from .harness import (
    birkhoff_check,
    bounded_before_check,
    certify_negative_torsion,
    cone_torsion_bound,
    find_zero_torsion_on_curve,
    graph_quarter_bound,
    segment_torsion_root,
    zero_torsion_sweep,
)
from .models import (
    IdentityModel,
    PendulumModel,
    RigidRotationModel,
    TranslationModel,
    TwistMapModel,
    flow_with_variational,
    isotopy_variant,
    orbit_period,
)
from .torsion import (
    angle_determination,
    linking_finite,
    tilt_determination,
    torsion_asymptotic,
    torsion_finite,
    torsion_profile,
    torsion_via_tilt,
)

__version__ = "0.1.0"
