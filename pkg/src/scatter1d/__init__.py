"""Coupled-channel scattering on a line with matrix potentials.

The library computes reflection/transmission amplitude matrices for
one-dimensional Schrodinger problems with N coupled channels and a real
symmetric potential of finite support, assembles and checks the 2N x 2N
S-matrix, enumerates bound and half-bound states, verifies the phase
counting identity eta(0) = pi (n_bound + n_half/2 - N/2) and the threshold
trace identity Tr[rho(0) + rho_tilde(0)] = -2 (N - n_half), and factors
scatterers into composable transfer blocks.
"""

from .errors import (
    AnchorNotConverged,
    ExtrapolationUnstable,
    GridTooCoarse,
    MixedWavenumbers,
    NonUnitaryInput,
    NumericalError,
    OverlappingCells,
    ScatterError,
    SingularBlock,
    SingularCore,
    SingularStrength,
    SingularTransmission,
    ValidationError,
)
from .potential import (
    DeltaTerm,
    ParityClass,
    PotentialSpec,
    SampledRegion,
    Segment,
    ValidatedPotential,
    bundled_spec_path,
    classify_parity,
    evaluate,
    load_spec,
    orthogonal_diagonalize,
    save_spec,
    spec_from_dict,
    spec_to_dict,
    validate,
)
from .propagator import (
    FundamentalState,
    PropagationReport,
    det_w,
    fundamental_at_R,
    fundamental_batch,
    initial_state,
    ode_step_count,
    step_constant,
    step_delta,
    step_ode,
    wronskian_defect,
)
from .amplitudes import (
    AmplitudeSet,
    ConstraintReport,
    SMatrix,
    amplitude_scan,
    amplitudes_at,
    amplitudes_from_fundamental,
    check_constraints,
    closed_form_double_delta,
    closed_form_single_delta,
    richardson_extrapolate,
    s_matrix,
    threshold_amplitudes,
)
from .spectrum import (
    BoundState,
    GridTooCoarseWarning,
    SpectrumReport,
    bound_matrix,
    default_alpha_max,
    find_bound_states,
    half_bound_count,
    spectrum_report,
)
from .levinson import (
    LevinsonResult,
    PhaseCurve,
    TraceResult,
    default_k_grid,
    eta_at_threshold,
    levinson_check,
    phase_curve,
    raw_phase,
    threshold_trace_check,
    unwrap_mod_pi,
)
from .factorization import (
    TransferFactor,
    amplitudes_from_factor,
    commuting_class_check,
    compose_factors,
    factor_from_amplitudes,
    periodic_compose,
    translate_amplitudes,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeSet",
    "AnchorNotConverged",
    "BoundState",
    "ConstraintReport",
    "DeltaTerm",
    "ExtrapolationUnstable",
    "FundamentalState",
    "GridTooCoarse",
    "GridTooCoarseWarning",
    "LevinsonResult",
    "MixedWavenumbers",
    "NonUnitaryInput",
    "NumericalError",
    "OverlappingCells",
    "ParityClass",
    "PhaseCurve",
    "PotentialSpec",
    "PropagationReport",
    "SMatrix",
    "SampledRegion",
    "ScatterError",
    "Segment",
    "SingularBlock",
    "SingularCore",
    "SingularStrength",
    "SingularTransmission",
    "SpectrumReport",
    "TraceResult",
    "TransferFactor",
    "ValidatedPotential",
    "ValidationError",
    "amplitude_scan",
    "amplitudes_at",
    "amplitudes_from_factor",
    "amplitudes_from_fundamental",
    "bound_matrix",
    "bundled_spec_path",
    "check_constraints",
    "classify_parity",
    "closed_form_double_delta",
    "closed_form_single_delta",
    "commuting_class_check",
    "compose_factors",
    "default_alpha_max",
    "default_k_grid",
    "det_w",
    "eta_at_threshold",
    "evaluate",
    "factor_from_amplitudes",
    "find_bound_states",
    "fundamental_at_R",
    "fundamental_batch",
    "half_bound_count",
    "initial_state",
    "levinson_check",
    "load_spec",
    "ode_step_count",
    "orthogonal_diagonalize",
    "periodic_compose",
    "phase_curve",
    "raw_phase",
    "richardson_extrapolate",
    "s_matrix",
    "save_spec",
    "spec_from_dict",
    "spec_to_dict",
    "spectrum_report",
    "step_constant",
    "step_delta",
    "step_ode",
    "threshold_amplitudes",
    "threshold_trace_check",
    "translate_amplitudes",
    "unwrap_mod_pi",
    "validate",
    "wronskian_defect",
]
