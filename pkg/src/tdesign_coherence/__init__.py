"""Uncertainty and certainty estimates for coherence with respect to design-structured POVMs."""
from .bounds import (
    BetaMoments,
    BoundsReport,
    CoefficientTable,
    beta_moments,
    chebyshev_coefficients,
    coefficient_table,
    coherence_bounds,
    evaluate_batch,
    flexible_coefficients,
    taylor_coefficients,
    upsilon_root,
)
from .coherence import average_coherence, coherence, outcome_probabilities, shannon_entropy
from .design import (
    DesignError,
    DesignNormError,
    DesignPovm,
    DesignSchemaError,
    DesignValidationError,
    PartitionError,
    QuantumDesign,
    ValidationReport,
    assign_povms,
    builtin_design,
    default_orientations,
    dimension_factor,
    frame_potential,
    load_design,
    save_design,
    validate_design,
)
from .qstate import (
    BlochSpec,
    DensityMatrix,
    InvalidStateError,
    load_state,
    power_sums,
    qubit_from_bloch,
    save_state,
    spectrum,
    symmetric_moment,
    von_neumann_entropy,
)

__version__ = "0.1.0"
