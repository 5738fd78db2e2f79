"""Exact dynamics, quantum Fisher information and geometric phase of one qubit
sharing a zero-temperature Lorentzian reservoir with N-1 identical qubits."""
from .model import (
    AmplitudeTrace,
    CouplingRegime,
    EffectiveRate,
    EnsembleSpec,
    ModelError,
    NumericalError,
    ReservoirSpec,
    TimeGrid,
    amplitude_asymptote,
    amplitude_closed_form,
    amplitude_trace,
    classify_regime,
    critical_qubit_number,
    effective_rate_d,
    lorentzian_spectral_density,
)
from .kernel import SolverConfig, memory_kernel, solve_amplitude_ode
from .bath import discretize_bath, evolve_single_excitation
from .qfi import (
    DensityMatrix2,
    QfiResult,
    SpectralDecomposition,
    cramer_rao_bound,
    eigen_decompose,
    phase_probe_density,
    qfi_analytic,
    qfi_asymptote,
    qfi_spectral,
    reduced_density_matrix,
    sld_operator,
)
from .gp import GpResult, Trajectory, build_trajectory, gp_closed_form, gp_kinematic, gp_unitary_limit
from .experiments import ExperimentConfig, detect_oscillation_onset, run_experiment, run_validation

__version__ = "0.1.0"
