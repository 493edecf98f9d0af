"""Acceptance criteria, one test each, checked at their stated tolerances.

Reference values are computed here from the closed-form expressions rather
than taken from the package, so the package's own closed-form helpers are
also under test.
"""
import math
import time

import numpy as np

from mimcav import CavityGeometry, CollectiveCoordinates
from mimcav.cli import main
from mimcav.couplings import extract_couplings_numeric
from mimcav.modes import basis, check_spectrum_symmetry, coupling_term_counts, symmetric_count
from mimcav.spectrum import solve_spectrum, sweep_surface
from mimcav.validation import run_suite

R_SET = (0.3, 0.5, 0.9)
WINDOW = (1.4, 2.3)


def triplet(R):
    th = math.asin(math.sqrt(R))
    a = math.asin(math.sqrt(3 + R) / 2)
    return [math.pi / 2, (math.pi + a - th) / 2, (2 * math.pi - a - th) / 2]


def slope(R, delta):
    th = math.asin(math.sqrt(R))
    t = 2 * delta
    xi = t / 4
    den = 3 * math.cos(t) * R + 3 * math.cos(2 * th + 3 * t) + math.sin(2 * th) * math.sin(t)
    return xi * math.sin(t) * math.sin(2 * th) / den


def test_closed_form_roots(report_line):
    t0 = time.perf_counter()
    roots = solve_spectrum(CavityGeometry(2, 0.5), CollectiveCoordinates(2.0, 0.0), WINDOW).roots
    elapsed = time.perf_counter() - t0
    ref = np.array(triplet(0.5))
    dev = float(np.max(np.abs(roots - ref) / ref)) if len(roots) == 3 else math.inf
    ok = dev < 1e-9 and elapsed < 1.0
    assert report_line(1, ok, f"closed-form roots, max rel dev {dev:.2e} (< 1e-9), {elapsed:.2f} s (< 1 s)")


def test_linear_coupling(report_line):
    t0 = time.perf_counter()
    worst_rel, worst_zero = 0.0, 0.0
    for R in R_SET:
        g = CavityGeometry(2, R)
        worst_zero = max(worst_zero, abs(extract_couplings_numeric(g, 1, 1).b_rel))
        for i in (2, 3):
            ref = slope(R, triplet(R)[i - 1])
            # the closed form is the derivative with respect to minus the separation
            worst_rel = max(worst_rel, abs(extract_couplings_numeric(g, 1, i).b_rel + ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    ok = worst_rel < 1e-6 and worst_zero < 1e-8 and elapsed < 5.0
    assert report_line(2, ok, f"linear couplings, max rel dev {worst_rel:.2e} (< 1e-6), "
                              f"|B_1,1| {worst_zero:.1e} (< 1e-8), {elapsed:.2f} s (< 5 s)")


def test_quadratic_coupling(report_line):
    t0 = time.perf_counter()
    worst = 0.0
    for R in R_SET:
        ref = -math.pi ** 2 / 24 * math.sqrt(R / (1 - R))
        worst = max(worst, abs(extract_couplings_numeric(CavityGeometry(2, R), 1, 1).m_rel - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 5.0
    assert report_line(3, ok, f"quadratic coupling, max rel dev {worst:.2e} (< 1e-4), {elapsed:.2f} s (< 5 s)")


def test_com_parity(report_line):
    g = CavityGeometry(2, 0.5)
    t0 = time.perf_counter()
    worst = 0.0
    for q in np.linspace(1.9, 2.1, 21):
        for Q in np.linspace(-0.1, 0.1, 21):
            a = solve_spectrum(g, CollectiveCoordinates(q, Q), WINDOW).roots
            b = solve_spectrum(g, CollectiveCoordinates(q, -Q), WINDOW).roots
            worst = max(worst, float(np.max(np.abs(a - b))) if len(a) == len(b) else math.inf)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 30.0
    assert report_line(4, ok, f"Q-parity, max mismatch {worst:.1e} (< 1e-10), {elapsed:.2f} s (< 30 s)")


def test_parity_forced_zeros(report_line):
    g = CavityGeometry(2, 0.5)
    rest = [extract_couplings_numeric(g, 1, i) for i in (1, 2, 3)]
    b_com = max(abs(c.b_com) for c in rest)
    p = max(abs(c.p_cross) for c in rest)
    shifted = max(abs(extract_couplings_numeric(g, 1, i, Q0=0.1).b_com) for i in (1, 2, 3))
    ok = b_com < 1e-8 and p < 1e-6 and shifted > 1e-4
    assert report_line(5, ok, f"parity zeros, |B'| {b_com:.1e} (< 1e-8), |P| {p:.1e} (< 1e-6), "
                              f"max |B'| at Q0=0.1 {shifted:.2e} (> 1e-4)")


def test_transfer_matrix_equivalence(report_line):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        R = rng.uniform(0.05, 0.95)
        c = CollectiveCoordinates(2 + rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
        g = CavityGeometry(2, R)
        a = solve_spectrum(g, c, (1.0, 3.5), method="closed", xtol_rel=0.0).roots
        b = solve_spectrum(g, c.positions(), (1.0, 3.5), method="transfer", xtol_rel=0.0).roots
        worst = max(worst, float(np.max(np.abs(a - b))) if len(a) == len(b) else math.inf)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 10.0
    assert report_line(6, ok, f"transfer matrix vs closed equation, max root dev {worst:.1e} (< 1e-10), "
                              f"{elapsed:.2f} s (< 10 s)")


def test_degenerate_limit(report_line):
    spreads, last = [], None
    for R in (0.9, 0.99, 0.9999):
        roots = solve_spectrum(CavityGeometry(2, R), None, WINDOW).roots
        spreads.append(float(np.ptp(roots)))
        last = roots
    far = float(np.max(np.abs(last - math.pi / 2)))
    ok = spreads[0] > spreads[1] > spreads[2] and len(last) == 3 and far < 2e-2
    assert report_line(7, ok, "degenerate limit, spreads " + ", ".join(f"{s:.3e}" for s in spreads)
                       + f" (strictly decreasing), R=0.9999 within {far:.1e} of pi/2 (< 2e-2)")


def test_three_membrane_symmetry(report_line):
    g = CavityGeometry(3, 0.5)
    b = basis(3)
    t0 = time.perf_counter()
    res = {b.names[j]: check_spectrum_symmetry(g, b, j, 0.05).residual for j in range(3)}
    elapsed = time.perf_counter() - t0
    ok = res["com"] < 1e-10 and res["scissors"] < 1e-10 and res["stretch"] > 1e-4 and elapsed < 10.0
    assert report_line(8, ok, f"three-membrane symmetry, com {res['com']:.1e}, scissors {res['scissors']:.1e} "
                              f"(< 1e-10), stretch {res['stretch']:.2e} (> 1e-4), {elapsed:.2f} s (< 10 s)")


def test_counting(report_line):
    values = (symmetric_count(2), symmetric_count(3), coupling_term_counts(4))
    ok = values == (1, 2, (1, 6))
    assert report_line(9, ok, f"counting, symmetric_count(2,3) = {values[:2]}, coupling_term_counts(4) = {values[2]}")


def _extrema_spacing(x, w):
    d = np.sign(np.diff(w))
    turn = np.nonzero(d[:-1] != d[1:])[0] + 1
    maxima = [x[j] for j in turn if w[j] > w[j - 1]]
    minima = [x[j] for j in turn if w[j] < w[j - 1]]
    return np.concatenate((np.diff(maxima), np.diff(minima)))


def test_reference_sweep_and_suite_runtime(report_line, tmp_path):
    out = tmp_path / "spectrum.csv"
    code = main(["spectrum", "--out", str(out)])
    rows = [line.split(",") for line in out.read_text().splitlines()
            if line and not line.startswith("#")][1:]
    omega = {}
    for q, n, i, w, flag in rows:
        omega.setdefault(int(i), []).append((float(q), float(w), int(flag)))
    branches = sorted(omega)
    continuous = all(all(r[2] == 1 for r in omega[i]) for i in branches)
    w = np.array([[r[1] for r in omega[i]] for i in branches])
    gap = float(np.min(np.diff(w, axis=0))) if len(branches) == 3 else -1.0

    # the default sweep is shorter than one modulation period, so the period is
    # measured on a high multiplet where pi/k is small
    n = 20
    k = n * math.pi / 2
    qs = np.linspace(2 - 4 * math.pi / k, 2 + 4 * math.pi / k, 401)
    surf = sweep_surface(CavityGeometry(2, 0.5), ["q"], [qs], ((n - 1) * math.pi / 2 + 0.05,
                         (n + 2) * math.pi / 2 - 0.05), multiplets=[n], fixed={"Q": 0.0})
    spacing = float(np.mean(np.concatenate([_extrema_spacing(qs, surf.omega[(n, i)]) for i in (1, 2, 3)])))
    # q is the separation: each membrane moves by half of the q-period
    per_membrane = spacing / 2
    period_dev = abs(per_membrane - math.pi / k) / (math.pi / k)

    t0 = time.perf_counter()
    suite = run_suite()
    elapsed = time.perf_counter() - t0
    ok = (code == 0 and branches == [1, 2, 3] and len(rows) == 3 * 401 and continuous and gap > 0
          and period_dev < 0.05 and suite.passed and elapsed < 60.0)
    assert report_line(10, ok, f"reference sweep, {len(branches)} continuous branches, min gap {gap:.3e} (> 0), "
                               f"period per membrane {per_membrane:.5f} vs pi/k {math.pi / k:.5f} "
                               f"(dev {period_dev:.1%} < 5%), full suite {elapsed:.1f} s (< 60 s)")
