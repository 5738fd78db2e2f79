"""Geometric phase of the watched qubit over one quasicycle T = 2 pi / omega0.

Two independent routes:

* kinematic: follow the eigenvector that starts with weight one along a sampled
  Schrodinger-picture trajectory and take the phase of the discrete Bargmann
  product <w(0)|w(T)> prod_k <w(t_{k+1})|w(t_k)>, which is gauge invariant;
* closed form: integrate the excited-state weight of the dominant eigenvector
  over the cycle, omega0 * int_0^T |<e|w(t)>|^2 dt, with composite Simpson.

Conventions (fixed so the two routes agree for any coupling): the initial state
is cos(theta/2)|e> + sin(theta/2)|g>, i.e. the excited population is
cos^2(theta/2), and the coherence <e|rho|g> carries the free factor
exp(-i omega0 t). In the unitary limit both routes give pi (1 + cos theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .model import EnsembleSpec, ModelError, NumericalError, ReservoirSpec, amplitude_closed_form
from .qfi import eig2_stack

BRANCH_FLOOR = 1e-12
DENOM_FLOOR = 1e-14
MIN_STEPS = 200


@dataclass(frozen=True)
class Trajectory:
    """Sampled qubit states over one cycle and the followed eigenbranch.

    ``states`` has shape (K+1, 2, 2) in the (|e>, |g>) basis; ``eigenvalues`` and
    ``eigenvectors`` (shape (K+1, 2)) describe the branch that starts pure.
    """

    times: np.ndarray
    states: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    theta0: float
    omega0: float

    def __post_init__(self):
        if self.times.size < MIN_STEPS + 1:
            raise ModelError(f"trajectory needs at least {MIN_STEPS} steps")


@dataclass(frozen=True)
class GpResult:
    phase: float
    unwrapped: float
    method: str
    theta0: float


def _check_theta(theta0: float):
    if not -1e-12 <= theta0 <= 2 * math.pi + 1e-12:
        raise ModelError(f"theta must lie in [0, 2 pi], got {theta0!r}")


def principal(phase: float) -> float:
    """Map to (-pi, pi]."""
    wrapped = math.remainder(phase, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def _reference_gauge(v):
    """Ground component real non-negative; excited component when the ground one vanishes."""
    g = v[:, 1]
    pivot = np.where(np.abs(g) > 1e-150, g, v[:, 0])
    mag = np.abs(pivot)
    phase = np.where(mag > 0, np.conj(pivot) / np.where(mag > 0, mag, 1.0), 1.0)
    return v * phase[:, None]


def build_trajectory(spec: ReservoirSpec, ens: EnsembleSpec, theta0: float,
                     k_steps: int = 4000) -> Trajectory:
    _check_theta(theta0)
    if k_steps < MIN_STEPS:
        raise ModelError(f"k_steps must be >= {MIN_STEPS}")
    period = 2 * math.pi / spec.omega0
    times = np.linspace(0.0, period, k_steps + 1)
    c = amplitude_closed_form(spec, ens, times)

    p0 = math.cos(theta0 / 2) ** 2
    coh0 = math.cos(theta0 / 2) * math.sin(theta0 / 2)
    excited = p0 * c**2
    coherence = coh0 * c * np.exp(-1j * spec.omega0 * times)
    states = np.empty((times.size, 2, 2), dtype=complex)
    states[:, 0, 0] = excited
    states[:, 0, 1] = coherence
    states[:, 1, 0] = np.conj(coherence)
    states[:, 1, 1] = 1 - excited

    lam_p, lam_m, vp, vm = eig2_stack(excited, 1 - excited, coherence)
    vals, vecs = _follow_branch(lam_p, lam_m, vp, vm)
    if np.min(vals) < BRANCH_FLOOR:
        k = int(np.argmin(vals))
        raise NumericalError(f"followed eigenbranch vanishes at t={times[k]:.6g} (lambda={vals[k]:.3g})")

    vecs = _reference_gauge(vecs)
    # sign continuity so that consecutive overlaps have non-negative real part
    ov = np.sum(np.conj(vecs[:-1]) * vecs[1:], axis=1)
    flips = np.concatenate([[1.0], np.cumprod(np.where(ov.real < 0, -1.0, 1.0))])
    vecs = vecs * flips[:, None]
    return Trajectory(times, states, vals, vecs, float(theta0), spec.omega0)


def _follow_branch(lam_p, lam_m, vp, vm):
    """Start on the weight-one branch and keep the eigenvector continuous.

    Away from degeneracies this is the dominant branch throughout; a degeneracy
    (only possible for coherence-free states) is crossed by maximal overlap.
    """
    same = np.abs(np.sum(np.conj(vp[:-1]) * vp[1:], axis=1))
    cross = np.abs(np.sum(np.conj(vp[:-1]) * vm[1:], axis=1))
    if lam_p[0] >= lam_m[0] and np.all(same >= cross):
        return lam_p.copy(), vp.copy()

    vals = np.empty_like(lam_p)
    vecs = np.empty_like(vp)
    on_plus = lam_p[0] >= lam_m[0]
    vals[0], vecs[0] = (lam_p[0], vp[0]) if on_plus else (lam_m[0], vm[0])
    for k in range(1, lam_p.size):
        prev = vecs[k - 1]
        if abs(np.vdot(prev, vp[k])) >= abs(np.vdot(prev, vm[k])):
            vals[k], vecs[k] = lam_p[k], vp[k]
        else:
            vals[k], vecs[k] = lam_m[k], vm[k]
    return vals, vecs


def gp_kinematic(traj: Trajectory) -> GpResult:
    """Kinematic geometric phase of a pure-start trajectory.

    ``unwrapped`` sums the phases of the individual small overlaps plus the
    closing overlap; it is invariant under any smooth regauging and, in the
    reference gauge of :func:`build_trajectory`, lies on the same branch as the
    closed form.
    """
    v = traj.eigenvectors
    if np.min(traj.eigenvalues) < BRANCH_FLOOR:
        raise NumericalError("followed eigenbranch vanishes")
    steps = np.sum(np.conj(v[1:]) * v[:-1], axis=1)
    closing = np.vdot(v[0], v[-1])
    unwrapped = float(np.sum(np.angle(steps)) + np.angle(closing))
    weight = math.sqrt(traj.eigenvalues[0] * traj.eigenvalues[-1])
    # magnitude is irrelevant to Arg; normalize per factor to avoid underflow
    total = weight * closing * np.prod(steps / np.abs(steps))
    return GpResult(float(np.angle(total)), unwrapped, "kinematic", traj.theta0)


def dominant_excited_weight(c2, theta0: float):
    """|<e|w_+>|^2 for excited population c2 cos^2(theta/2) and |coherence|^2 = c2 sin^2(theta)/4.

    Same value as the ratio 4(p - l)^2 / (c2 sin^2 theta + 4 (p - l)^2) with l the
    smaller eigenvalue, rewritten branchwise to avoid cancellation.
    """
    c2 = np.asarray(c2, dtype=float)
    p = c2 * math.cos(theta0 / 2) ** 2
    s = c2 * math.sin(theta0) ** 2
    r = np.sqrt(s + (2 * p - 1) ** 2)
    upper = p >= 0.5
    x = np.where(upper, r + 2 * p - 1, r + 1 - 2 * p)
    num = np.where(upper, x * x, s)
    den = s + x * x
    tiny = den < DENOM_FLOOR
    return np.where(tiny, math.cos(theta0 / 2) ** 2, num / np.where(tiny, 1.0, den))


def gp_closed_form(spec: ReservoirSpec, ens: EnsembleSpec, theta0: float,
                   k_steps: int = 2000) -> GpResult:
    _check_theta(theta0)
    if k_steps < 2 or k_steps % 2:
        raise ModelError("Simpson needs an even number of panels")
    period = 2 * math.pi / spec.omega0
    times = np.linspace(0.0, period, k_steps + 1)
    c2 = amplitude_closed_form(spec, ens, times) ** 2
    value = spec.omega0 * float(simpson(dominant_excited_weight(c2, theta0), x=times))
    return GpResult(principal(value), value, "closed_form", float(theta0))


def gp_unitary_limit(theta0: float) -> float:
    _check_theta(theta0)
    return math.pi * (1 + math.cos(theta0))
