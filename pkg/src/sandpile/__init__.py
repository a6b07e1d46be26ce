"""Stochastic sandpile: half-toppling dynamics, exact sampling and exact oracles."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .chains import (
    MacroTrace,
    MicroRun,
    MicroState,
    drive,
    drive_general,
    macro_batch_general,
    macro_step_complete,
    macro_step_general,
    micro_batch,
    micro_run_to_absorption,
    micro_step,
)
from .dynamics import (
    Config,
    InstructionStream,
    OrderPolicy,
    StabilizationReport,
    config_to_sleeping_active,
    half_topple,
    is_unstable,
    stabilize,
)
from .errors import *  # noqa: F403
from .graph import (
    GraphTopology,
    build_graph,
    complete_graph,
    cycle_graph,
    grid_graph,
    load_graph,
    parse_graph_spec,
    path_graph,
    small_suite,
    star_graph,
)
from .oracle import (
    MarkovMatrix,
    ProbabilityVector,
    macro_count_law,
    micro_absorption_distribution,
    sampler_distribution,
    stabilization_distribution,
    stationary_distribution,
    transition_matrix,
)
from .rng import SplitMix64, derive_seed
from .sampler import exact_sample, sample_batch, sample_density
from .stats import (
    concentration_check,
    drift_profile,
    generic_k_density,
    geometric_domination,
    long_jump_probability,
    mass_exit_probability,
    tau0_tail,
    tv_distance,
)
