"""Exact small-instance computations in Lipschitz-free p-spaces."""

from .constants import A_min, A_of_R, A_primitive_of_R, audit_all, mu_const, rational_factor
from .errors import (
    AnchorError,
    ConstructionError,
    ExponentError,
    FreepError,
    MapError,
    SizeCapError,
    SpaceMismatchError,
    SpaceStructureError,
    TreeError,
    TriangleError,
)
from .extend import StepFunction, bound_D, extend, extension_report, measured_lip
from .freenorm import distortion, dual_lower_bound, envelope_compare, norm, norm_exact, norm_search
from .molecule import ElementaryDecomposition, Molecule, elementary, pushforward
from .space import (
    QuasiMetricSpace,
    SubsetSelection,
    WeightedTree,
    from_points,
    grid_space,
    leaves,
    line_space,
    skeleton_tree_space,
    snowflake,
    validate,
)
from .whitney import (
    NagataProvider,
    partition_of_unity,
    verify_pou,
    verify_whitney,
    whitney_build,
    whitney_params,
)

__version__ = "0.1.0"
