"""Open quantum random walks on finite graphs.

Block superoperator representation, ergodicity and the fundamental matrix,
hitting probabilities and mean hitting times, the mean hitting time formula,
the minimal-polynomial formula, and Monte Carlo trajectory sampling.
"""

from .builders import (
    bloch_density,
    build_classical,
    build_cycle3,
    build_rotation_pair,
    build_cycle3_walk,
    build_gate,
    build_npath,
    build_pq_pair,
    classical_coin,
    general_coin,
    hadamard_split_coin,
)
from .ergodic import NotErgodicError, classify, fundamental, omega, power_convergence
from .hitting import (
    NonAbsorbingError,
    first_visit_dist,
    hit_value,
    hitting_bundle,
    mht_value,
    return_value,
    series_bundle,
    taboo,
)
from .mhtf import HypothesisError, assemble, check_formula, target_time
from .minpoly import minimal_polynomial, finite_formula_value
from .model import BlockOperator, OqwModel, SiteState, ValidationError, block_rep, evolve, step, validate
from .specfile import ParseError, load_walk, parse_density, parse_walk
from .trajectories import TrajectoryConfig, npath_experiment, sample_hitting_time

__version__ = "0.1.0"

__all__ = [
    "BlockOperator",
    "HypothesisError",
    "NonAbsorbingError",
    "NotErgodicError",
    "OqwModel",
    "ParseError",
    "SiteState",
    "TrajectoryConfig",
    "ValidationError",
    "assemble",
    "bloch_density",
    "block_rep",
    "build_classical",
    "build_cycle3",
    "build_cycle3_walk",
    "build_gate",
    "build_npath",
    "build_pq_pair",
    "build_rotation_pair",
    "check_formula",
    "classical_coin",
    "classify",
    "evolve",
    "finite_formula_value",
    "first_visit_dist",
    "fundamental",
    "general_coin",
    "hadamard_split_coin",
    "hit_value",
    "hitting_bundle",
    "load_walk",
    "mht_value",
    "minimal_polynomial",
    "npath_experiment",
    "omega",
    "parse_density",
    "parse_walk",
    "power_convergence",
    "return_value",
    "sample_hitting_time",
    "series_bundle",
    "step",
    "taboo",
    "target_time",
    "validate",
]
