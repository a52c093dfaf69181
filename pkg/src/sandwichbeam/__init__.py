"""Order-reduced finite differences for the clamped-free sandwich beam.

Public API re-exports; see the module docstrings for the mathematics.
"""

from .config import (
    ExperimentConfig,
    InitialSpec,
    dump_config,
    load_config,
    load_state_csv,
    parse_config,
    save_state_csv,
)
from .discretization import (
    FD,
    ORFD,
    SCHEMES,
    BeamState,
    FirstOrderOperator,
    Grid,
    OperatorBundle,
    ShearSolveWorkspace,
    assemble_Ah,
    assemble_M,
    assemble_fd,
    assemble_orfd,
    extend_shear_boundary,
    make_grid,
    make_shear_workspace,
    solve_k,
    solve_shear,
    to_first_order,
    validate_state,
)
from .dynamics import (
    ObservabilityCertificate,
    TrajectoryRecord,
    discrete_energy,
    make_box_initial,
    make_random_initial,
    observability_certificate,
    simulate,
    step,
)
from .errors import (
    NonConvergenceError,
    NumericalError,
    SandwichBeamError,
    SingularOperatorError,
    ValidationError,
)
from .model import (
    BeamCoefficients,
    LargeShearCondition,
    LayerSpec,
    derive_coefficients,
    large_shear_condition,
    pde_observability_bound,
)
from .spectral import (
    AnalyticSpectrum,
    EigenPairSet,
    SpectrumReport,
    analytic_eigenpairs,
    dense_eigenvalues,
    spectrum_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
