"""Spectral Galerkin solver for 3D incompressible Navier-Stokes on the
periodic box, with an energy-ledger suite that certifies energy equality,
the Leray-Hopf inequality, right continuity, bounded variation, and the
uniqueness and fixed-point behavior of the linear drift problem."""

from .basis import (
    BasisSet,
    Mode,
    SpectralField,
    WaveVector,
    build_basis,
    norm,
    pair,
    project,
)
from .convergence import RefinementReport, l2H_distance, refinement_study, weak_trace
from .ledger import (
    EnergyLedger,
    PsiDiagnostic,
    Verdict,
    check_energy_equality,
    check_energy_inequality,
    compute_ledger,
    psi_profile,
    psi_sequence,
    right_continuity_modulus,
    sample_norm_squared,
    total_variation,
)
from .scenarios import Scenario, make_scenario
from .solver import (
    DriftSpec,
    Forcing,
    SolverConfig,
    SolverError,
    Trajectory,
    load_trajectory,
    restrict,
    save_trajectory,
    simulate_nse,
    solve_problem_c,
)
from .trilinear import (
    ContinuityEstimate,
    TriadTensor,
    B_apply,
    b_eval,
    build_tensor,
    estimate_C,
    load_tensor,
    save_tensor,
)

__all__ = [
    "BasisSet",
    "Mode",
    "SpectralField",
    "WaveVector",
    "build_basis",
    "norm",
    "pair",
    "project",
    "TriadTensor",
    "ContinuityEstimate",
    "build_tensor",
    "b_eval",
    "B_apply",
    "estimate_C",
    "save_tensor",
    "load_tensor",
    "Forcing",
    "DriftSpec",
    "SolverConfig",
    "SolverError",
    "Trajectory",
    "simulate_nse",
    "solve_problem_c",
    "restrict",
    "save_trajectory",
    "load_trajectory",
    "EnergyLedger",
    "Verdict",
    "PsiDiagnostic",
    "compute_ledger",
    "check_energy_equality",
    "check_energy_inequality",
    "total_variation",
    "sample_norm_squared",
    "right_continuity_modulus",
    "psi_sequence",
    "psi_profile",
    "RefinementReport",
    "l2H_distance",
    "weak_trace",
    "refinement_study",
    "Scenario",
    "make_scenario",
]

__version__ = "0.1.0"
