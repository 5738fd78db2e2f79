"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal output) or directly with
``python3 tests/test_acceptance.py`` for just the summary lines.
"""
import math
import time

import numpy as np
import pytest

from commonbath.bath import discretize_bath, evolve_single_excitation
from commonbath.experiments import detect_oscillation_onset
from commonbath.gp import build_trajectory, gp_closed_form, gp_kinematic, gp_unitary_limit
from commonbath.kernel import SolverConfig, solve_amplitude_ode
from commonbath.model import (
    EnsembleSpec,
    ReservoirSpec,
    TimeGrid,
    amplitude_closed_form,
    amplitude_trace,
    critical_qubit_number,
)
from commonbath.qfi import (
    finite_difference_derivatives,
    phase_probe_density,
    phase_probe_derivative,
    qfi_analytic,
    qfi_asymptote,
    qfi_closed_form_curve,
    qfi_phase_probe,
    qfi_sld,
)

pytestmark = pytest.mark.acceptance

OMEGA0 = 5.0
AMP_GAMMAS = (0.05, 0.5, 10.0)
AMP_NS = (1, 2, 4, 8, 11, 20)
GP_GAMMAS = (0.05, 10.0)
GP_NS = (1, 2, 4, 8, 16, 64)
GP_THETAS = (math.pi / 6, math.pi / 4, math.pi / 2, 3 * math.pi / 4)
POWERS = tuple(2**k for k in range(11))


def report(number, title, ok, detail):
    return f"CRITERION {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"


def criterion_1():
    start = time.perf_counter()
    grid = TimeGrid(0.0, 50.0, 500)
    bath_grid = TimeGrid(0.0, 10.0, 200)
    kernel_dev = bath_dev = 0.0
    for g in AMP_GAMMAS:
        spec = ReservoirSpec(g, omega0=OMEGA0)
        bath = discretize_bath(spec, 4000, 50.0)
        for n in AMP_NS:
            ens = EnsembleSpec(n)
            ode = solve_amplitude_ode(spec, ens, grid, SolverConfig(dt=0.005))
            kernel_dev = max(kernel_dev, amplitude_trace(spec, ens, grid).sup_distance(ode))
            oracle = evolve_single_excitation(bath, ens, bath_grid)
            bath_dev = max(bath_dev, amplitude_trace(spec, ens, bath_grid).sup_distance(oracle))
    elapsed = time.perf_counter() - start
    ok = kernel_dev < 1e-6 and bath_dev < 1e-2 and elapsed < 120
    return ok, report(1, "amplitude oracle triangle", ok,
                      f"kernel ODE {kernel_dev:.2e} (tol 1e-6), discretized bath {bath_dev:.2e} (tol 1e-2), "
                      f"runtime {elapsed:.0f}s (limit 120s)")


def criterion_2():
    times = np.linspace(0.0, 30.0, 50)
    thetas = (0.0, math.pi / 4, math.pi / 2)
    spectral_dev = sld_dev = theta_dev = 0.0
    for g in AMP_GAMMAS:
        spec = ReservoirSpec(g, omega0=OMEGA0)
        for n in AMP_NS:
            ens = EnsembleSpec(n)
            for t in times:
                ref = qfi_analytic(spec, ens, float(t)).value
                c = amplitude_closed_form(spec, ens, float(t))
                vals = [qfi_phase_probe(th, c) for th in thetas]
                spectral_dev = max(spectral_dev, max(abs(v - ref) for v in vals))
                sld_dev = max(sld_dev, max(abs(qfi_sld(phase_probe_density(th, c), phase_probe_derivative(th, c)) - ref)
                                           for th in thetas))
                theta_dev = max(theta_dev, max(vals) - min(vals))
    ok = spectral_dev < 1e-8 and sld_dev < 1e-8 and theta_dev < 1e-10
    return ok, report(2, "QFI equivalence", ok,
                      f"spectral vs analytic {spectral_dev:.2e}, SLD vs analytic {sld_dev:.2e} (tol 1e-8), "
                      f"theta spread {theta_dev:.2e} (tol 1e-10)")


def criterion_3():
    plateaus = {1: 0.0, 2: 0.25, 4: 0.5625, 8: 0.765625}
    plateau_ok = all(qfi_asymptote(EnsembleSpec(n)) == v for n, v in plateaus.items())
    parts = []
    ok = plateau_ok
    for g in AMP_GAMMAS:
        gaps = {n: abs(qfi_analytic(ReservoirSpec(g), EnsembleSpec(n), 100.0).value - v)
                for n, v in plateaus.items()}
        worst = max(gaps, key=gaps.get)
        ok &= gaps[worst] < 1e-6
        parts.append(f"gamma0={g:g} worst gap {gaps[worst]:.1e} at N={worst}")
    return ok, report(3, "QFI asymptotes at t=100", ok,
                      "; ".join(parts) + f" (tol 1e-6); plateau values {'exact' if plateau_ok else 'WRONG'}")


def criterion_4():
    onset = detect_oscillation_onset(0.05, n_max=20)
    rows = {g: (detect_oscillation_onset(g, n_max=20), math.floor(1 / (2 * g)) + 1) for g in (0.05, 0.1, 0.25)}
    ok = onset == 11 and all(a == b == critical_qubit_number(ReservoirSpec(g)) for g, (a, b) in rows.items())
    return ok, report(4, "critical qubit number", ok,
                      f"onset(0.05)={onset}; " + ", ".join(f"gamma0={g:g}: scan {a} formula {b}"
                                                            for g, (a, b) in rows.items()))


def criterion_5():
    t = np.linspace(5.0, 50.0, 451)
    curves = np.array([qfi_closed_form_curve(ReservoirSpec(0.05), EnsembleSpec(n), t) for n in (1, 2, 4, 8)])
    min_step = float(np.min(np.diff(curves, axis=0)))
    q = qfi_closed_form_curve(ReservoirSpec(10.0), EnsembleSpec(1), np.linspace(0.0, 3.0, 3001))
    maxima = int(np.sum((q[1:-1] > q[:-2]) & (q[1:-1] > q[2:])))
    ok = min_step >= 0 and maxima >= 2
    return ok, report(5, "QFI trends", ok,
                      f"gamma0=0.05 smallest N-step for t>=5 is {min_step:.3g} (needs >= 0); "
                      f"gamma0=10 N=1 has {maxima} local maxima on [0,3] (needs >= 2)")


def criterion_6():
    spec = ReservoirSpec(1e-9, omega0=OMEGA0)
    dev = 0.0
    for th in GP_THETAS:
        for value in (gp_kinematic(build_trajectory(spec, EnsembleSpec(1), th)).unwrapped,
                      gp_closed_form(spec, EnsembleSpec(1), th).unwrapped):
            dev = max(dev, abs(value - gp_unitary_limit(th)))
    at_pi = max(abs(gp_kinematic(build_trajectory(spec, EnsembleSpec(1), math.pi)).unwrapped),
                abs(gp_closed_form(spec, EnsembleSpec(1), math.pi).unwrapped))
    ok = dev < 1e-5 and at_pi < 1e-10
    return ok, report(6, "GP unitary limit", ok,
                      f"max |GP - pi(1+cos theta)| {dev:.2e} (tol 1e-5); |GP(pi)| {at_pi:.1e} (tol 1e-10)")


def criterion_7():
    agree = 0.0
    for g in GP_GAMMAS:
        spec = ReservoirSpec(g, omega0=OMEGA0)
        for n in GP_NS:
            for th in GP_THETAS:
                kin = gp_kinematic(build_trajectory(spec, EnsembleSpec(n), th)).unwrapped
                cf = gp_closed_form(spec, EnsembleSpec(n), th).unwrapped
                agree = max(agree, abs(kin - cf))
    limit = gp_unitary_limit(math.pi / 4)
    mono_ok = True
    gaps = {}
    for g in GP_GAMMAS:
        spec = ReservoirSpec(g, omega0=OMEGA0)
        seq = np.array([gp_closed_form(spec, EnsembleSpec(n), math.pi / 4).unwrapped for n in POWERS])
        mono_ok &= bool(np.all(np.diff(seq) >= 0))
        gaps[g] = abs(seq[-1] - limit)
    sat_ok = all(v < 1e-3 for v in gaps.values())
    ok = agree < 1e-3 and mono_ok and sat_ok
    return ok, report(7, "GP agreement and saturation", ok,
                      f"kinematic vs closed form {agree:.2e} (tol 1e-3); non-decreasing in N: "
                      f"{'yes' if mono_ok else 'no'}; |GP(N=1024) - pi(1+cos pi/4)| "
                      + ", ".join(f"{gap:.2e} at gamma0={g:g}" for g, gap in gaps.items()) + " (tol 1e-3)")


def criterion_8():
    dev = 0.0
    for g in GP_GAMMAS:
        spec = ReservoirSpec(g, omega0=OMEGA0)
        for k in range(64):
            th = 2 * math.pi * k / 64
            dev = max(dev, abs(gp_closed_form(spec, EnsembleSpec(2), th).unwrapped
                               - gp_closed_form(spec, EnsembleSpec(2), 2 * math.pi - th).unwrapped))
    ok = dev < 1e-10
    return ok, report(8, "GP theta symmetry", ok, f"max |GP(theta) - GP(2pi - theta)| {dev:.1e} over 64 samples (tol 1e-10)")


def criterion_9():
    spec, ens = ReservoirSpec(0.05), EnsembleSpec(2)
    grid = TimeGrid(0.0, 50.0, 250)
    exact = amplitude_trace(spec, ens, grid)
    errs = [exact.sup_distance(solve_amplitude_ode(spec, ens, grid, SolverConfig(dt=dt))) for dt in (0.1, 0.05)]
    ratio = errs[0] / errs[1]
    simpson = 0.0
    for g in GP_GAMMAS:
        s = ReservoirSpec(g, omega0=OMEGA0)
        for th in GP_THETAS:
            simpson = max(simpson, abs(gp_closed_form(s, ens, th, 800).unwrapped
                                       - gp_closed_form(s, ens, th, 1600).unwrapped))
    deriv = 0.0
    for c in (0.1, 0.5, 0.795, 1.0):
        for th in (0.0, 0.7, math.pi / 2, 3.0):
            h = 1e-6
            fd = (phase_probe_density(th + h, c).entries - phase_probe_density(th - h, c).entries) / (2 * h)
            deriv = max(deriv, float(np.max(np.abs(fd - phase_probe_derivative(th, c)))))
    ok = 12 <= ratio <= 20 and simpson < 1e-8 and deriv < 1e-8
    return ok, report(9, "numerical hygiene", ok,
                      f"RK4 halving ratio {ratio:.2f} (needs 12-20); Simpson 800 vs 1600 {simpson:.1e} (tol 1e-8); "
                      f"d rho/d theta analytic vs central difference {deriv:.1e} (tol 1e-8)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 10)])
def test_criterion(criterion, capsys):
    ok, line = criterion()
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = []
    for criterion in CRITERIA:
        ok, line = criterion()
        print(line, flush=True)
        results.append(ok)
    print(f"{sum(results)}/{len(results)} criteria pass")
