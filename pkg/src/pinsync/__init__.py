"""Fixed-time cluster synchronization of coupled networks under pinning control.

The package validates coupling-matrix structure, computes eigenvalue-based
settling-time guarantees for four protocol regimes (cluster, complete,
master-slave, and equilibrium stabilization), simulates the non-Lipschitz
coupled protocols with fixed-step explicit integrators, and ships the
scalar comparison-equation machinery the guarantees rest on.
"""
from . import presets
from .bounds import (
    BoundsReport,
    DeltaEstimate,
    PinnedBlockSet,
    compute_bounds,
    compute_bounds_complete,
    compute_bounds_master_slave,
    gain_thresholds,
    jacobi_eigenvalues,
    min_eigenvalue_symmetric,
    pinned_block_set,
    pinned_matrix,
    power_transform,
    quad_delta_estimate,
    settling_time,
    spectral_norm,
)
from .dynamics import (
    IntrinsicDynamics,
    NetworkSpec,
    SystemState,
    cluster_rhs,
    complete_rhs,
    equilibrium_residual,
    intrinsic_f,
    master_slave_rhs,
    nn_stabilization_rhs,
    sig_pow,
)
from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    DomainError,
    PinsyncError,
    RegimeError,
    StructureError,
)
from .matrices import (
    BlockView,
    ClusterPartition,
    block,
    is_class_a1,
    is_class_a2,
    is_class_a3,
    is_class_a4,
)
from .oracles import (
    ComparisonSolution,
    YoungResult,
    comparison_ode_solve,
    finite_time_bound,
    fixed_time_bound,
    norm_equivalence_check,
    quadratic_identity_check,
    young_check,
)
from .sim import (
    DEFAULT_SEED,
    DEFAULT_SETTLING_TOL,
    IntegratorConfig,
    SweepRow,
    Trajectory,
    ViolationSummary,
    detect_settling,
    error_index,
    initial_state,
    integrate,
    integrate_intrinsic,
    lyapunov_inequality_check,
    step_convergence_check,
    sweep,
    write_sweep_csv,
    write_trajectory_csv,
)

__version__ = "0.1.0"
