"""Acceptance criteria; each test prints one PASS/FAIL line."""

import cmath
import math
import time

import numpy as np
import pytest

from gconcurrence.asymptotics import (
    left_edge_coeffs_complex,
    left_edge_coeffs_real,
    right_edge_constant,
    right_edge_exponent,
)
from gconcurrence.ensembles import SystemSpec, sample_arrays
from gconcurrence.harness import jackknife_mean, moment_check
from gconcurrence.inverse_transform import (
    default_grid_d,
    density_d,
    density_d_bromwich,
    density_g,
    density_n2_closed,
)
from gconcurrence.moments import (
    concentration_point,
    det_moment_hs,
    det_moment_stirling,
    g_mean_variance,
    g_moment_hs,
    g_moment_induced,
)
from gconcurrence.specfun import digamma

INV_E = 0.367879441


@pytest.fixture(scope="module")
def edge_samples():
    """10^7 determinants per beta for n = 3, shared by the right-edge checks."""
    cache = {}

    def get(beta):
        if beta not in cache:
            cache[beta] = sample_arrays(SystemSpec.hs(3, beta), 10_000_000, seed=2024 + beta).det
        return cache[beta]

    return get


def test_criterion_01_two_qubit_closed_forms(verdict):
    start = time.perf_counter()
    worst = 0.0
    for beta in (1, 2):
        d = np.linspace(0.25 * 0.025, 0.25 * 0.975, 400)
        a = density_d(2, beta, d).values
        b = density_n2_closed(beta, "D", d).values
        worst = max(worst, float(np.max(np.abs(a - b))))
        g = np.linspace(0.025, 0.975, 400)
        a = density_g(2, beta, g, method="contour_inversion").values
        b = density_n2_closed(beta, "G", g).values
        worst = max(worst, float(np.max(np.abs(a - b))))
    elapsed = time.perf_counter() - start
    verdict(1, worst < 1e-6 and elapsed < 10, f"sup error {worst:.2e} (< 1e-6), {elapsed:.1f} s (< 10 s)")


def test_criterion_02_exact_moment_values(verdict):
    cases = [
        (det_moment_hs(2, 2, 1).real, 1 / 10),
        (det_moment_hs(2, 1, 1).real, 1 / 8),
        (det_moment_hs(3, 2, 1).real, 1 / 165),
        (g_moment_hs(2, 2, 1).real, 3 * math.pi / 16),
    ]
    worst = max(abs(a / b - 1) for a, b in cases)
    verdict(2, worst <= 4 * np.finfo(float).eps, f"max relative error {worst:.2e} (machine precision)")


@pytest.mark.slow
def test_criterion_03_monte_carlo_moments(verdict):
    start = time.perf_counter()
    worst, where = 0.0, ""
    for n in (2, 3, 4):
        for beta in (1, 2):
            arr = sample_arrays(SystemSpec.hs(n, beta), 1_000_000, seed=300 + 10 * n + beta)
            for of in ("D", "G"):
                for row in moment_check(SystemSpec.hs(n, beta), 0, [1, 2, 3], seed=0, of=of, data=arr):
                    if abs(row.z_score) > worst:
                        worst, where = abs(row.z_score), f"n={n} beta={beta} {of}^{row.order:g}"
    elapsed = time.perf_counter() - start
    verdict(3, worst < 4 and elapsed < 300, f"max |z| {worst:.2f} at {where} (< 4), {elapsed:.0f} s (< 300 s)")


def test_criterion_04_support_cutoff(verdict):
    worst = 0.0
    for n in (3, 4):
        for beta in (1, 2):
            d0 = float(n) ** -n
            for factor in (1 + 1e-4, 1.01, 1.2, 2.0):
                worst = max(worst, abs(density_d_bromwich(n, beta, d0 * factor)))
    verdict(4, worst < 1e-8, f"max |P(D)| beyond n^-n {worst:.2e} (< 1e-8)")


def _formula_mass(beta, t1):
    # int K t^p / D dD over D in [n^-n e^-t1, n^-n] = K t1^(p+1) / (p+1)
    p = right_edge_exponent(3, beta)
    return right_edge_constant(3, beta) * t1 ** (p + 1) / (p + 1)


@pytest.mark.slow
def test_criterion_05_right_edge_histogram(verdict, edge_samples):
    # top 10 of 100 uniform bins on [0, 1/27]
    lo = 0.9 / 27
    t1 = -math.log(0.9)
    details, ok = [], True
    for beta in (2, 1):
        det = edge_samples(beta)
        count = int(np.count_nonzero(det >= lo))
        expected = det.size * _formula_mass(beta, t1)
        dev = count / expected - 1
        ok &= abs(dev) < 0.05
        details.append(f"beta={beta}: histogram/formula - 1 = {dev:+.3f}")
    verdict(5, ok, "; ".join(details) + " (|.| < 0.05)")


@pytest.mark.slow
@pytest.mark.parametrize("beta", [2, 1])
def test_right_edge_histogram_matches_exact_density(edge_samples, beta):
    det = edge_samples(beta)
    lo = 0.9 / 27
    count = int(np.count_nonzero(det >= lo))
    curve = density_d(3, beta, default_grid_d(3, beta), method="stitched")
    exact = det.size * (1.0 - float(curve.cdf([lo])[0]))
    assert abs(count - exact) < 4 * math.sqrt(exact)


def test_criterion_06_left_edge_golden_coefficients(verdict):
    c3, r3, r4 = left_edge_coeffs_complex(3), left_edge_coeffs_real(3), left_edge_coeffs_real(4)
    expected = [
        (c3, "V~", 30240), (c3, "V~~", 45360), (c3, "V", 0),
        (r3, "X~", 1440), (r3, "W~", 480), (r4, "W~", 10321920),
        (r3, "X", 0), (r3, "W", 0), (r4, "W", 0),
        (c3, "Z", 168), (c3, "X", 10080), (c3, "X~", 35280), (r3, "Z", 120),
    ]
    wrong = []
    for e, label, value in expected:
        got = e.coefficient(label)
        if abs(got - value) > 1e-12 * max(abs(value), 1.0):
            wrong.append(f"{label}[n={e.n},beta={e.beta}] = {got:g}, expected {value}")
    verdict(6, not wrong, "; ".join(wrong) if wrong else f"all {len(expected)} coefficients exact")


def test_criterion_07_gamma_cancellation(verdict):
    worst = 0.0
    for n in range(3, 11):
        for c in (1.0, -1.0, 10.0, -10.0):
            psi = lambda x, c=c: digamma(x) + c  # noqa: E731
            pairs = [
                (left_edge_coeffs_complex(n), left_edge_coeffs_complex(n, psi=psi), ("X~",)),
                (left_edge_coeffs_real(n), left_edge_coeffs_real(n, psi=psi), ("X~", "W~")),
            ]
            for base, moved, labels in pairs:
                for lab in labels:
                    a, b = base.coefficient(lab), moved.coefficient(lab)
                    worst = max(worst, abs(a - b) / abs(a))
    verdict(7, worst < 1e-12, f"max relative change under psi -> psi + c: {worst:.2e}")


@pytest.mark.slow
def test_criterion_08_concentration(verdict):
    start = time.perf_counter()
    ns = (4, 8, 16, 32, 64)
    stats = [g_mean_variance(n, 2) for n in ns]
    gaps = [abs(m - INV_E) for m, _ in stats]
    variances = [v for _, v in stats]
    gap_ok = all(a > b for a, b in zip(gaps, gaps[1:]))
    var_ok = all(a > b for a, b in zip(variances, variances[1:]))
    arr = sample_arrays(SystemSpec.hs(32, 2), 100_000, seed=808)
    mean, se = jackknife_mean(arr.g)
    z = (mean - stats[3][0]) / se
    elapsed = time.perf_counter() - start
    ok = gap_ok and var_ok and abs(z) < 4 and elapsed < 300
    verdict(8, ok, f"gap to 1/e decreasing: {gap_ok}, variance decreasing: {var_ok}, "
                   f"n=32 Monte Carlo z = {z:+.2f}, {elapsed:.0f} s")


def test_criterion_09_induced_limit(verdict):
    x2 = concentration_point(2)
    gaps = [abs(g_moment_induced(j, 2 * j, 2, 1).real - x2) for j in (4, 8, 16, 32)]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    worst = 0.0
    for n in range(2, 13):
        for m in (0.5, 1, 2, 3.7, 2 - 1.5j):
            for k, beta in ((n, 2), (n + 1, 1)):
                a = g_moment_induced(n, k, beta, m).value
                b = g_moment_hs(n, beta, m).value
                worst = max(worst, abs(a / b - 1))
    verdict(9, monotone and worst < 1e-12,
            f"gaps to 2/e {', '.join(f'{g:.4f}' for g in gaps)}; induced vs HS max rel {worst:.1e}")


def test_criterion_10_moment_round_trip(verdict):
    worst = 0.0
    for n in (3, 4, 5):
        for beta in (1, 2):
            curve = density_d(n, beta, default_grid_d(n, beta), method="stitched")
            for m in (1, 2, 3, 4):
                worst = max(worst, abs(curve.moment(m) / det_moment_hs(n, beta, m).real - 1))
    verdict(10, worst < 1e-5, f"max relative error {worst:.2e} (< 1e-5)")


def test_criterion_11_stirling_form(verdict):
    errs = []
    for r in (10, 30, 100):
        m = 1j * r
        ratio = cmath.exp(det_moment_stirling(3, 2, m).log_value - det_moment_hs(3, 2, m).log_value)
        errs.append(abs(ratio - 1))
    decreasing = all(a > b for a, b in zip(errs, errs[1:]))
    verdict(11, decreasing and errs[-1] < 1e-2,
            f"relative errors {', '.join(f'{e:.3g}' for e in errs)} at |M| = 10, 30, 100; "
            f"decreasing: {decreasing}; need < 1e-2 at 100")
