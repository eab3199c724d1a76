"""Julia sets, pressure and dimension estimates for finitely generated rational semigroups."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .sphere import INF, NumericTolerances, RationalMap, RootSolverError, chordal_distance
from .semigroup import GeneratorSystem, blocked_system, eval_word, preimage_tree
from .julia import PointCloud, find_seed, julia_cloud, render
from .thermo import bowen_dimension, entropy_lyapunov, pressure, pressure_curve
from .poincare import critical_exponent, poincare_levels
from .measure import ball_mass, box_dimension, conformal_measure, regularity_audit, separating_overlap
from .checks import expansion_estimate, hyperbolicity_check, osc_check, postcritical_cloud
from .config import SystemConfig, load_config

__all__ = [
    "INF",
    "NumericTolerances",
    "RationalMap",
    "RootSolverError",
    "chordal_distance",
    "GeneratorSystem",
    "blocked_system",
    "eval_word",
    "preimage_tree",
    "PointCloud",
    "find_seed",
    "julia_cloud",
    "render",
    "bowen_dimension",
    "entropy_lyapunov",
    "pressure",
    "pressure_curve",
    "critical_exponent",
    "poincare_levels",
    "ball_mass",
    "box_dimension",
    "conformal_measure",
    "regularity_audit",
    "separating_overlap",
    "expansion_estimate",
    "hyperbolicity_check",
    "osc_check",
    "postcritical_cloud",
    "SystemConfig",
    "load_config",
]
