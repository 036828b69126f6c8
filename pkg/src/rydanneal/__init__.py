"""Rydberg annealer simulator with local-detuning graph encoding.

Max-Cut and MIS instances are mapped to per-atom light shifts and a 2D atom
layout, annealed under an optimized global drive, and scored against exact
brute-force oracles. A fast simulated-annealing baseline and laser-noise
studies round out the toolkit.
"""

__version__ = "0.1.0"

from .graphs import (  # noqa: F401
    MAXCUT, MIS, CostSpectrum, ExactSolution, GraphParseError, ProblemGraph,
    approximation_ratio, brute_force_solve, cost, cycle_graph,
    degeneracy_spectrum, hardness_convergence_scan, hardness_parameter,
    load_graph, make_graph, maxcut_cost, mis_cost, parse_graph, path_graph,
    random_graph, save_graph, star_graph,
)
from .encoding import (  # noqa: F401
    AtomLayout, DeviceParams, EmbeddingError, EncodingResult,
    FeasibilityReport, InfeasibleScaleError, edge_distance, embed_layout,
    encode, realized_interactions, validate_embedding,
)
from .hamiltonians import (  # noqa: F401
    DiagonalHamiltonian, apply_hamiltonian, build_target, build_target_maxcut,
    build_target_mis, ground_space, rydberg_diagonal,
)
from .pulses import (  # noqa: F401
    ControlVector, NoiseSpec, PulseSchedule, ScheduleSignError, build_schedule,
    initial_guess, inject_noise,
)
from .evolution import (  # noqa: F401
    IntegrationError, RecordingOptions, Trajectory, decode_solutions,
    expectation_energy, fidelity, initial_ground_state, instantaneous_spectrum,
    population_snapshot, propagate,
)
from .optimize import (  # noqa: F401
    OptimizerReport, PipelineConfig, bnb_pipeline, nelder_mead_minimize,
    quasi_newton_minimize,
)
from .sa import SAConfig, SAResult, fast_sa, sa_benchmark  # noqa: F401
from .pipeline import (  # noqa: F401
    ProtocolConfig, PulseObjective, RunConfig, RunRecord, compare_solvers,
    noise_study, solve_graph,
)
