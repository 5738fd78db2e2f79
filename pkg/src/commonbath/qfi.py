"""Reduced state of the watched qubit, quantum Fisher information and Cramer-Rao bounds.

Matrices are 2x2 complex in the basis order (|1>, |0>): the excited population
sits top-left. The phase parameter theta is imprinted by U = |0><0| + e^{i theta}|1><1|
on the probe (|0> + |1>)/sqrt(2) before the channel acts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EnsembleSpec, ModelError, NumericalError, ReservoirSpec, amplitude_closed_form

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-12
EIG_FLOOR = 1e-14
DERIV_FLOOR = 1e-12
FD_STEP = 1e-6
CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class DensityMatrix2:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise ModelError("density matrix must be 2x2")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ModelError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > TRACE_TOL:
            raise ModelError(f"trace {np.trace(m).real!r} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -POSITIVITY_TOL:
            raise ModelError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def excited_population(self) -> float:
        return float(self.entries[0, 0].real)

    @property
    def coherence(self) -> complex:
        """<1|rho|0>."""
        return complex(self.entries[0, 1])

    @property
    def bloch_length(self) -> float:
        a, d, b = self.entries[0, 0].real, self.entries[1, 1].real, self.entries[0, 1]
        return math.sqrt((a - d) ** 2 + 4 * abs(b) ** 2)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order; ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class QfiResult:
    value: float
    channel_time: float | None = None
    n_qubits: int | None = None


def reduced_density_matrix(rho11: float, rho00: float, rho10: complex, c) -> DensityMatrix2:
    """Amplitude-damping channel with propagator coefficient ``c`` applied to an initial qubit state."""
    DensityMatrix2(np.array([[rho11, rho10], [np.conj(rho10), rho00]]))
    c = complex(c)
    return DensityMatrix2(np.array([
        [rho11 * abs(c) ** 2, rho10 * c],
        [np.conj(rho10) * np.conj(c), rho00 + rho11 * (1 - abs(c) ** 2)],
    ]))


def phase_probe_density(theta: float, c: float) -> DensityMatrix2:
    """Channel output for the phase-imprinted optimal probe.

    Diagonal (c^2/2, 1 - c^2/2), coherence (c/2) e^{i theta}.
    """
    if not -1 - 1e-12 <= c <= 1 + 1e-12:
        raise ModelError("amplitude must lie in [-1, 1]")
    return reduced_density_matrix(0.5, 0.5, 0.5 * np.exp(1j * theta), c)


def phase_probe_derivative(theta: float, c: float) -> np.ndarray:
    """Exact d rho / d theta of :func:`phase_probe_density`."""
    off = 0.5j * c * np.exp(1j * theta)
    return np.array([[0.0, off], [np.conj(off), 0.0]], dtype=complex)


def eig2_stack(a, d, b):
    """Closed-form eigensystem of [[a, b], [b*, d]] for stacked real a, d and complex b.

    Returns (lam_plus, lam_minus, v_plus, v_minus) with eigenvectors as (..., 2)
    arrays, first nonzero component real positive. Degenerate points get the
    computational basis.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    b = np.asarray(b, dtype=complex)
    r = np.sqrt((a - d) ** 2 + 4 * np.abs(b) ** 2)
    mean = (a + d) / 2
    lam_p = mean + r / 2
    lam_m = mean - r / 2

    # two algebraically equivalent forms; pick the one without cancellation
    top = a >= d
    v1 = np.where(top, (a - d + r) / 2, b)
    v2 = np.where(top, np.conj(b), (d - a + r) / 2)
    vp = np.stack([v1 + 0j, v2 + 0j], axis=-1)
    nrm = np.linalg.norm(vp, axis=-1)
    degenerate = nrm < 1e-300
    nrm = np.where(degenerate, 1.0, nrm)
    vp = vp / nrm[..., None]
    vp = np.where(degenerate[..., None], np.array([1.0 + 0j, 0.0]), vp)
    vp = _gauge_first_real(vp)
    vm = np.stack([-np.conj(vp[..., 1]), np.conj(vp[..., 0])], axis=-1)
    vm = _gauge_first_real(vm)
    return lam_p, lam_m, vp, vm


def _gauge_first_real(v, tiny=1e-300):
    first = v[..., 0]
    use_first = np.abs(first) > tiny
    pivot = np.where(use_first, first, v[..., 1])
    mag = np.abs(pivot)
    phase = np.where(mag > 0, np.conj(pivot) / np.where(mag > 0, mag, 1), 1)
    out = v * phase[..., None]
    # write the pivot back as an exact real so no rounding residue survives
    out[..., 0] = np.where(use_first, mag, out[..., 0])
    out[..., 1] = np.where(use_first, out[..., 1], mag)
    return out


def eigen_decompose(rho: DensityMatrix2) -> SpectralDecomposition:
    m = rho.entries
    lp, lm, vp, vm = eig2_stack(m[0, 0].real, m[1, 1].real, m[0, 1])
    vals = np.array([float(lp), float(lm)])
    vecs = np.stack([vp, vm], axis=1)
    return SpectralDecomposition(vals, vecs)


def sld_operator(decomp: SpectralDecomposition, drho: np.ndarray) -> np.ndarray:
    """Symmetric logarithmic derivative solving d rho = (L rho + rho L)/2.

    Matrix elements whose eigenvalue pair sums below the floor are set to zero;
    they lie outside the support of rho and do not contribute to Tr[rho L^2].
    A nonzero derivative in that sector has no SLD and raises NumericalError.
    """
    v = decomp.eigenvectors
    lam = decomp.eigenvalues
    d_eig = v.conj().T @ drho @ v
    denom = lam[:, None] + lam[None, :]
    support = denom > EIG_FLOOR
    if np.any(~support & (np.abs(d_eig) > DERIV_FLOOR)):
        raise NumericalError("d rho has weight outside the support of rho")
    l_eig = np.where(support, 2 * d_eig / np.where(support, denom, 1.0), 0.0)
    return v @ l_eig @ v.conj().T


def qfi_sld(rho: DensityMatrix2, drho: np.ndarray) -> float:
    """Tr[rho L^2] via the SLD."""
    L = sld_operator(eigen_decompose(rho), drho)
    return float(np.trace(rho.entries @ L @ L).real)


def spectral_derivatives(decomp: SpectralDecomposition, drho: np.ndarray):
    """Eigenvalue derivatives and connection matrix <w_i | d w_j> from first-order perturbation.

    Diagonal connection terms are gauge dependent and never enter the QFI; they are
    returned as zero.
    """
    v = decomp.eigenvectors
    lam = decomp.eigenvalues
    d_eig = v.conj().T @ drho @ v
    dlam = np.real(np.diag(d_eig)).copy()
    gap = lam[None, :] - lam[:, None]
    ok = np.abs(gap) > EIG_FLOOR
    overlaps = np.where(ok, d_eig / np.where(ok, gap, 1.0), 0.0)
    np.fill_diagonal(overlaps, 0.0)
    return dlam, overlaps


def finite_difference_derivatives(rho_of_theta, theta: float, step: float = FD_STEP):
    """Central-difference eigen-derivatives of the family ``rho_of_theta``.

    Relies on the decomposition's gauge being smooth in theta.
    """
    centre = eigen_decompose(rho_of_theta(theta))
    plus = eigen_decompose(rho_of_theta(theta + step))
    minus = eigen_decompose(rho_of_theta(theta - step))
    dlam = (plus.eigenvalues - minus.eigenvalues) / (2 * step)
    dvec = (plus.eigenvectors - minus.eigenvectors) / (2 * step)
    overlaps = centre.eigenvectors.conj().T @ dvec
    np.fill_diagonal(overlaps, 0.0)
    return centre, dlam, overlaps


def qfi_spectral(decomp: SpectralDecomposition, dtheta_eigvals, overlaps,
                 channel_time: float | None = None, n_qubits: int | None = None) -> QfiResult:
    """QFI from the eigen-decomposition: classical (population) part plus coherent part."""
    lam = decomp.eigenvalues
    dlam = np.asarray(dtheta_eigvals, dtype=float)
    classical = 0.0
    for li, dli in zip(lam, dlam):
        if li < EIG_FLOOR:
            if abs(dli) < DERIV_FLOOR:
                continue
            raise NumericalError("eigenvalue vanishes while its derivative does not")
        classical += dli * dli / li
    quantum = 0.0
    for i in range(lam.size):
        for j in range(lam.size):
            if i == j:
                continue
            s = lam[i] + lam[j]
            if s < EIG_FLOOR:
                continue
            quantum += (lam[i] - lam[j]) ** 2 / s * abs(overlaps[i, j]) ** 2
    return QfiResult(float(classical + 2 * quantum), channel_time, n_qubits)


def qfi_phase_probe(theta: float, c: float, method: str = "analytic") -> float:
    """QFI of the phase probe after the channel, through the spectral formula.

    ``method`` picks how eigen-derivatives are obtained: ``"analytic"``
    (perturbation theory on the exact d rho), ``"finite_difference"`` or
    ``"both"``, which cross-checks the two and raises on disagreement.
    """
    if method not in ("analytic", "finite_difference", "both"):
        raise ModelError(f"unknown method {method!r}")
    rho = phase_probe_density(theta, c)
    results = []
    if method in ("analytic", "both"):
        decomp = eigen_decompose(rho)
        dlam, ov = spectral_derivatives(decomp, phase_probe_derivative(theta, c))
        results.append(qfi_spectral(decomp, dlam, ov).value)
    if method in ("finite_difference", "both"):
        decomp, dlam, ov = finite_difference_derivatives(lambda th: phase_probe_density(th, c), theta)
        results.append(qfi_spectral(decomp, dlam, ov).value)
    if len(results) == 2 and abs(results[0] - results[1]) > CONSISTENCY_TOL:
        raise NumericalError(f"analytic and finite-difference QFI disagree: {results[0]!r} vs {results[1]!r}")
    return results[0]


def qfi_analytic(spec: ReservoirSpec, ens: EnsembleSpec, t: float) -> QfiResult:
    if t < 0:
        raise ModelError("time must be non-negative")
    return QfiResult(amplitude_closed_form(spec, ens, t) ** 2, t, ens.n_qubits)


def qfi_closed_form_curve(spec: ReservoirSpec, ens: EnsembleSpec, times) -> np.ndarray:
    """Vectorized QFI(t) = C(t)^2 on a time array."""
    return np.asarray(amplitude_closed_form(spec, ens, np.asarray(times, dtype=float))) ** 2


def qfi_asymptote(ens: EnsembleSpec) -> float:
    return ((ens.n_qubits - 1) / ens.n_qubits) ** 2


def cramer_rao_bound(qfi: QfiResult | float, n_trials: int = 1) -> float:
    """Lower bound 1/(n F) on the estimator variance; ``inf`` when F = 0."""
    value = qfi.value if isinstance(qfi, QfiResult) else float(qfi)
    if n_trials < 1:
        raise ModelError("n_trials must be >= 1")
    if value < 0:
        raise ModelError("QFI cannot be negative")
    if value == 0:
        return math.inf
    return 1.0 / (n_trials * value)
