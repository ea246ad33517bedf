"""oscsync: averaging-based simulation and synchronization analysis for
networks of nonlinearly coupled planar oscillators."""

__version__ = "0.1.0"

from .coupling import (
    CouplingFunction,
    DirectedGraph,
    Interconnection,
    ValidationReport,
    graph_of,
    interconnection_from_edges,
    is_connected,
    make_coupling,
    validate_interconnection,
)
from .dynamics import (
    DampingSpec,
    Network,
    blocks_of,
    block_norms,
    harmonic_rhs,
    inverse_rotating_frame,
    lienard_rhs,
    rotating_frame,
    transformed_rhs,
    validate_damping,
    vdp_damping,
)
from .averaging import (
    AveragedModel,
    BracketError,
    QuadratureConfig,
    average_rhs,
    build_averaged_model,
    f_bar,
    find_rho,
    gamma_bar,
    kappa,
    rho_coupling,
)
from .geometry import (
    Cone,
    Wedge,
    dist_to_A,
    dist_to_B,
    dist_to_R,
    in_open_semicircle,
    lyapunov_V,
    smallest_cone,
    wedge_of,
)
from .quadrature import QuadratureError, adaptive_simpson
from .simulate import (
    AverageComparison,
    IntegratorConfig,
    InvarianceReport,
    Trajectory,
    compare_to_average,
    integrate,
    invariance_probe,
)
from .scenario import (
    Scenario,
    ScenarioError,
    build_network,
    load_scenario,
    parse_scenario,
    sample_initial,
    save_scenario,
)
from .harness import (
    OmegaStarResult,
    RunResult,
    SweepRecord,
    find_omega_star,
    omega_sweep,
    run_scenario,
)

__all__ = [
    "__version__",
    # coupling
    "CouplingFunction",
    "DirectedGraph",
    "Interconnection",
    "ValidationReport",
    "graph_of",
    "interconnection_from_edges",
    "is_connected",
    "make_coupling",
    "validate_interconnection",
    # dynamics
    "DampingSpec",
    "Network",
    "blocks_of",
    "block_norms",
    "harmonic_rhs",
    "inverse_rotating_frame",
    "lienard_rhs",
    "rotating_frame",
    "transformed_rhs",
    "validate_damping",
    "vdp_damping",
    # averaging
    "AveragedModel",
    "BracketError",
    "QuadratureConfig",
    "average_rhs",
    "build_averaged_model",
    "f_bar",
    "find_rho",
    "gamma_bar",
    "kappa",
    "rho_coupling",
    # geometry
    "Cone",
    "Wedge",
    "dist_to_A",
    "dist_to_B",
    "dist_to_R",
    "in_open_semicircle",
    "lyapunov_V",
    "smallest_cone",
    "wedge_of",
    # quadrature
    "QuadratureError",
    "adaptive_simpson",
    # simulate
    "AverageComparison",
    "IntegratorConfig",
    "InvarianceReport",
    "Trajectory",
    "compare_to_average",
    "integrate",
    "invariance_probe",
    # scenario / harness
    "Scenario",
    "ScenarioError",
    "build_network",
    "load_scenario",
    "parse_scenario",
    "sample_initial",
    "save_scenario",
    "OmegaStarResult",
    "RunResult",
    "SweepRecord",
    "find_omega_star",
    "omega_sweep",
    "run_scenario",
]
