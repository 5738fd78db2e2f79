"""Model parameters and the exact survival amplitude of one qubit in a shared bath.

Units: the Lorentzian width ``lambda_width`` is the canonical unit. Rates are
ratios to it and times are measured in ``1/lambda_width``. Every function here
is pure and every container is immutable.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_TOL = 1e-12
SERIES_THRESHOLD = 1e-6
IMAG_RESIDUE_TOL = 1e-10


class ModelError(ValueError):
    """Invalid model parameters or arguments."""


class NumericalError(ArithmeticError):
    """A numerical route lost accuracy or hit a singular configuration."""


@dataclass(frozen=True)
class ReservoirSpec:
    """Zero-temperature Lorentzian reservoir seen by qubits at frequency ``omega0``."""

    gamma0: float
    lambda_width: float = 1.0
    omega0: float = 5.0

    def __post_init__(self):
        for name in ("gamma0", "lambda_width", "omega0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def correlation_time(self) -> float:
        """Reservoir memory time 1/lambda."""
        return 1.0 / self.lambda_width

    @property
    def relaxation_time(self) -> float:
        return 1.0 / self.gamma0


@dataclass(frozen=True)
class EnsembleSpec:
    """``n_qubits`` identical qubits in the reservoir; one is watched, the rest protect it."""

    n_qubits: int

    def __post_init__(self):
        if isinstance(self.n_qubits, bool) or int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ModelError(f"n_qubits must be an integer >= 1, got {self.n_qubits!r}")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))


class CouplingRegime(enum.Enum):
    MARKOVIAN = "Markovian"
    NON_MARKOVIAN = "NonMarkovian"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class EffectiveRate:
    """``d_squared = lambda^2 - 2 N gamma0 lambda`` and its principal square root."""

    d_squared: float
    d: complex

    @property
    def is_oscillatory(self) -> bool:
        return self.d_squared < 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_steps`` intervals on ``[t_start, t_end]``."""

    t_start: float
    t_end: float
    n_steps: int
    samples: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.t_start < 0:
            raise ModelError("t_start must be >= 0")
        if not self.t_end > self.t_start:
            raise ModelError("t_end must exceed t_start")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ModelError("n_steps must be a positive integer")
        samples = np.linspace(self.t_start, self.t_end, int(self.n_steps) + 1)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def spacing(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def __len__(self):
        return self.n_steps + 1


@dataclass(frozen=True)
class AmplitudeTrace:
    """Real survival amplitude sampled on a grid, tagged with the route that produced it."""

    times: np.ndarray
    values: np.ndarray
    provenance: str

    def sup_distance(self, other: "AmplitudeTrace") -> float:
        if self.times.shape != other.times.shape or not np.allclose(self.times, other.times, rtol=0, atol=1e-12):
            raise ModelError("traces live on different grids")
        return float(np.max(np.abs(self.values - other.values)))


def classify_regime(spec: ReservoirSpec) -> CouplingRegime:
    half = spec.lambda_width / 2
    if abs(spec.gamma0 - half) <= BOUNDARY_TOL * max(1.0, half):
        return CouplingRegime.BOUNDARY
    return CouplingRegime.MARKOVIAN if spec.gamma0 < half else CouplingRegime.NON_MARKOVIAN


def critical_qubit_number(spec: ReservoirSpec) -> int:
    """Smallest N at which the collective decay turns oscillatory: floor(lambda / 2 gamma0) + 1."""
    return math.floor(spec.lambda_width / (2 * spec.gamma0)) + 1


def effective_rate_d(spec: ReservoirSpec, ens: EnsembleSpec) -> EffectiveRate:
    lam = spec.lambda_width
    d_squared = lam * lam - 2 * ens.n_qubits * spec.gamma0 * lam
    if d_squared >= 0:
        d = complex(math.sqrt(d_squared), 0.0)
    else:
        d = complex(0.0, math.sqrt(-d_squared))
    return EffectiveRate(d_squared=d_squared, d=d)


def collective_amplitude(spec: ReservoirSpec, ens: EnsembleSpec, t) -> np.ndarray:
    """Amplitude of the symmetric (bright) combination of all qubits.

    ``S(t) = exp(-lambda t/2) [cosh(D t/2) + (lambda/D) sinh(D t/2)]``, the
    resolvent of the exponential memory kernel with collective rate N*gamma0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ModelError("time must be non-negative")
    lam = spec.lambda_width
    d = effective_rate_d(spec, ens).d
    z = d * t / 2
    small = np.abs(z) < SERIES_THRESHOLD
    # sinh(D t/2)/D; the series covers D -> 0 where the ratio is 0/0
    with np.errstate(invalid="ignore", divide="ignore"):
        shd = np.where(small, t / 2 + d * d * t**3 / 48, np.sinh(z) / (d if d != 0 else 1.0))
    values = np.exp(-lam * t / 2) * (np.cosh(z) + lam * shd)
    residue = np.max(np.abs(values.imag)) if values.size else 0.0
    if residue >= IMAG_RESIDUE_TOL:
        raise ModelError(f"imaginary residue {residue:.3g} in closed-form amplitude")
    return values.real


def amplitude_closed_form(spec: ReservoirSpec, ens: EnsembleSpec, t):
    """Survival amplitude C(t) of the watched qubit, started excited with the others in ground.

    C(t) = (N-1)/N + S(t)/N. Returns a float for scalar ``t``, an array otherwise.
    """
    n = ens.n_qubits
    values = (n - 1) / n + collective_amplitude(spec, ens, t) / n
    return float(values) if np.ndim(values) == 0 else values


def amplitude_trace(spec: ReservoirSpec, ens: EnsembleSpec, grid: TimeGrid) -> AmplitudeTrace:
    return AmplitudeTrace(grid.samples, amplitude_closed_form(spec, ens, grid.samples), "closed-form")


def amplitude_asymptote(ens: EnsembleSpec) -> float:
    return (ens.n_qubits - 1) / ens.n_qubits


def lorentzian_spectral_density(spec: ReservoirSpec, omega):
    lam = spec.lambda_width
    value = spec.gamma0 * lam**2 / (2 * np.pi * ((spec.omega0 - np.asarray(omega, dtype=float)) ** 2 + lam**2))
    return float(value) if np.ndim(value) == 0 else value
