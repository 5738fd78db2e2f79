"""Brute-force reference: a discretized reservoir coupled to N qubits, one excitation total.

The Lorentzian is sampled on a uniform midpoint grid of ``m_modes`` frequencies in
``[w0 - W, w0 + W]`` with ``g_k^2 = J(w_k) dw``. In the interaction picture the
single-excitation amplitudes obey

    dc_i/dt = -i sum_k g_k exp(i(w0 - w_k)t) b_k
    db_k/dt = -i g_k exp(-i(w0 - w_k)t) sum_i c_i

while the ground amplitude (all qubits down, bath in vacuum) is a constant of motion.
The discrete bath only mimics a continuum up to its recurrence time 2*pi/dw, so runs
are capped at half of it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    AmplitudeTrace,
    EnsembleSpec,
    ModelError,
    NumericalError,
    ReservoirSpec,
    TimeGrid,
    lorentzian_spectral_density,
)

NORM_ABORT = 1e-6
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class DiscretizedBath:
    mode_freqs: np.ndarray
    couplings: np.ndarray
    omega0: float

    def __post_init__(self):
        if self.mode_freqs.shape != self.couplings.shape or self.mode_freqs.size < 2:
            raise ModelError("need at least two modes with matching couplings")
        if np.any(self.couplings < 0):
            raise ModelError("couplings must be non-negative")
        if np.any(np.diff(self.mode_freqs) <= 0):
            raise ModelError("mode frequencies must be strictly increasing")

    @property
    def m_modes(self) -> int:
        return self.mode_freqs.size

    @property
    def spacing(self) -> float:
        return float(self.mode_freqs[1] - self.mode_freqs[0])

    @property
    def recurrence_time(self) -> float:
        return 2 * np.pi / self.spacing

    @property
    def total_weight(self) -> float:
        """sum g_k^2, the discrete counterpart of the integral of J."""
        return float(np.sum(self.couplings**2))


@dataclass(frozen=True)
class SingleExcitationState:
    qubit_amps: np.ndarray
    mode_amps: np.ndarray
    ground_amp: complex = 0.0

    @property
    def norm(self) -> float:
        return float(abs(self.ground_amp) ** 2 + np.sum(np.abs(self.qubit_amps) ** 2)
                     + np.sum(np.abs(self.mode_amps) ** 2))


def discretize_bath(spec: ReservoirSpec, m_modes: int, half_width: float) -> DiscretizedBath:
    if m_modes < 2:
        raise ModelError("m_modes must be >= 2")
    if not half_width > 0:
        raise ModelError("half_width must be positive")
    dw = 2 * half_width / m_modes
    freqs = spec.omega0 - half_width + (np.arange(m_modes) + 0.5) * dw
    couplings = np.sqrt(lorentzian_spectral_density(spec, freqs) * dw)
    return DiscretizedBath(freqs, couplings, spec.omega0)


def default_initial_state(ens: EnsembleSpec, m_modes: int) -> SingleExcitationState:
    """Watched qubit (index 0) excited, spectators in ground, bath in vacuum."""
    qubits = np.zeros(ens.n_qubits, dtype=complex)
    qubits[0] = 1.0
    return SingleExcitationState(qubits, np.zeros(m_modes, dtype=complex), 0.0)


def evolve_states(bath: DiscretizedBath, ens: EnsembleSpec, grid: TimeGrid, dt: float = 0.002,
                  initial: SingleExcitationState | None = None):
    """RK4-integrate the single-excitation amplitudes.

    Returns ``(qubit_amps, final_state, max_norm_drift)`` where ``qubit_amps`` has
    shape ``(len(grid), N)``.
    """
    if initial is None:
        initial = default_initial_state(ens, bath.m_modes)
    if initial.qubit_amps.shape != (ens.n_qubits,) or initial.mode_amps.shape != (bath.m_modes,):
        raise ModelError("initial state does not match the ensemble and bath sizes")
    if not dt > 0:
        raise ModelError("dt must be positive")
    if dt > grid.spacing * (1 + 1e-12):
        raise ModelError(f"step {dt} exceeds grid spacing {grid.spacing}")
    if grid.t_end > bath.recurrence_time / 2:
        raise ModelError(f"horizon {grid.t_end} beyond half the bath recurrence time "
                         f"{bath.recurrence_time / 2:.4g}")

    det = bath.mode_freqs - bath.omega0
    g = bath.couplings
    c = initial.qubit_amps.astype(complex)
    b = initial.mode_amps.astype(complex)
    norm0 = initial.norm
    ground = initial.ground_amp

    def rhs(c, b, ph):
        dc = -1j * np.dot(g * ph, b)
        db = (-1j * np.sum(c)) * (g * np.conj(ph))
        return np.full_like(c, dc), db

    out = np.empty((len(grid), ens.n_qubits), dtype=complex)
    drift = 0.0
    t = 0.0
    for idx, target in enumerate(grid.samples):
        span = target - t
        if span > 0:
            m = max(1, int(np.ceil(span / dt - 1e-9)))
            h = span / m
            half = np.exp(-1j * det * (h / 2))
            for step in range(m):
                ph0 = np.exp(-1j * det * (t + step * h))
                ph1 = ph0 * half
                ph2 = ph1 * half
                k1c, k1b = rhs(c, b, ph0)
                k2c, k2b = rhs(c + h / 2 * k1c, b + h / 2 * k1b, ph1)
                k3c, k3b = rhs(c + h / 2 * k2c, b + h / 2 * k2b, ph1)
                k4c, k4b = rhs(c + h * k3c, b + h * k3b, ph2)
                c = c + h / 6 * (k1c + 2 * k2c + 2 * k3c + k4c)
                b = b + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            t = target
            norm = abs(ground) ** 2 + np.vdot(c, c).real + np.vdot(b, b).real
            drift = max(drift, abs(norm - norm0))
            if drift > NORM_ABORT:
                raise NumericalError(f"norm drift {drift:.3g} at t={t:.4g}; reduce dt (currently {dt})")
        out[idx] = c
    return out, SingleExcitationState(c, b, ground), drift


def evolve_single_excitation(bath: DiscretizedBath, ens: EnsembleSpec, grid: TimeGrid,
                             dt: float = 0.002,
                             initial: SingleExcitationState | None = None) -> AmplitudeTrace:
    """Propagator coefficient C(t) = c_0(t)/c_0(0) of the watched qubit.

    With the default start (watched qubit excited, others in ground) this is the
    quantity the closed form describes. The symmetric bath grid keeps it real.
    """
    if initial is None:
        initial = default_initial_state(ens, bath.m_modes)
    c00 = initial.qubit_amps[0]
    if abs(c00) == 0:
        raise ModelError("watched qubit must start with a nonzero amplitude")
    amps, _, _ = evolve_states(bath, ens, grid, dt, initial)
    ratio = amps[:, 0] / c00
    residue = float(np.max(np.abs(ratio.imag)))
    if residue > IMAG_TOL:
        raise NumericalError(f"propagator acquired imaginary part {residue:.3g}")
    return AmplitudeTrace(grid.samples, ratio.real.copy(), "bath-oracle")
