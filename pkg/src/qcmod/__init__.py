"""Discrete p-modulus, upper gradients and quasiconformal dilatation on
finite metric measure spaces."""

from .space import (
    Ball,
    MeasureSpace,
    SpaceError,
    ball,
    build_grid,
    build_path,
    build_product_with_interval,
    build_rug,
    build_snowflake,
    doubling_constant,
    graph_distance,
    greedy_5r_cover,
    load_space,
    random_space,
    save_space,
)
from .curves import (
    Curve,
    FamilyError,
    SeparationResult,
    annular_family,
    connect_family,
    displacement_family,
    explicit_family,
    line_integral,
    minorization_check,
    pushforward_family,
    shortest_violating_curve,
)
from .modulus import (
    ModulusError,
    ModulusProblem,
    ModulusResult,
    ScaleTooFine,
    admissibility_check,
    annulus_density,
    compute_modulus,
    conductance_oracle,
    solve_restricted,
)
from .maps import (
    RemetrizedMap,
    identity_map,
    load_map,
    minimal_upper_gradient,
    modgrad_scan,
    pointwise_HO,
    pointwise_lip,
    random_remetrization,
    save_map,
    scaling_map,
    snowflake_to_rug,
    sobolev_energy,
    upper_gradient_check,
    volume_derivative,
)
from .qc import (
    Battery,
    QCReport,
    analytic_K,
    check_condition_III,
    check_condition_IV,
    check_theorem1,
    esssup_HO,
    ko_lower_bound,
    qc_report,
    quasisymmetry_eta,
)

__version__ = "0.1.0"
