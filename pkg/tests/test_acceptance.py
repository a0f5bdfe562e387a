"""Desk-scale quantitative acceptance checks.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
pytest terminal summary under "acceptance criteria".
"""

import math
import subprocess
import sys
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from multdomains import arith, diagnostics, limitlaw, multfunc, stats
from multdomains.domains import DomainFamily, ball, hyperbolic, rectangle, tetrahedron, weyl_chamber, sym_poly_hyperbolic

ZETA2 = math.pi**2 / 6
SEED = 20240601


@pytest.mark.criterion("1")
def test_coprime_probability_on_square(criterion):
    t0 = time.perf_counter()
    dist = stats.exact_distribution(multfunc.builtin_gcd(2), rectangle(3000, 3000))
    elapsed = time.perf_counter() - t0
    p1 = float(dist.mass(1))
    err = abs(p1 - 6 / math.pi**2)
    criterion(err <= 0.01 and elapsed < 60, f"P(gcd=1)={p1:.6f}, |err|={err:.2e} <= 0.01, {elapsed:.1f}s < 60s")


@pytest.mark.criterion("2a")
def test_zeta_law_hyperbolic_monte_carlo(criterion):
    rng = limitlaw.worker_rng(SEED, 2)
    dist = stats.monte_carlo_distribution(multfunc.builtin_gcd(2), hyperbolic(2, 10**5), 10**5, rng)
    law = limitlaw.ZetaLaw(2)
    err = max(abs(float(dist.mass(j)) - law.pmf(j)) for j in range(1, 6))
    criterion(err <= 0.02, f"hyperbolic(2,1e5) MC, max_j<=5 |P(gcd=j) - zeta pmf| = {err:.4f} <= 0.02")


@pytest.mark.criterion("2b")
def test_zeta_law_cube_exact(criterion):
    dist = stats.exact_distribution(multfunc.builtin_gcd(3), rectangle(300, 300, 300))
    law = limitlaw.ZetaLaw(3)
    err = max(abs(float(dist.mass(j)) - law.pmf(j)) for j in range(1, 6))
    criterion(err <= 0.01, f"rectangle(300^3) exact, max_j<=5 |P(gcd=j) - zeta pmf| = {err:.5f} <= 0.01")


def _geometric_pmf(p, j):
    return (1 - 1 / p) * p**-j


@pytest.mark.criterion("3a")
def test_prime_exponents_one_dimensional(criterion):
    n = 10**6
    worst = 0.0
    for p in (2, 3, 5):
        for j in range(7):
            exact = Fraction(n // p**j - n // p ** (j + 1), n)
            worst = max(worst, abs(float(exact) - _geometric_pmf(p, j)))
    # the closed form above is cross-checked against vectorised exponents of 1..n
    lam = arith.lambda_p_array(np.arange(1, n + 1), 2)
    counts = np.bincount(lam, minlength=7)[:7]
    agree = all(counts[j] == n // 2**j - n // 2 ** (j + 1) for j in range(7))
    criterion(worst <= 2e-5 and agree, f"rectangle(1e6), max |exact - (1-1/p)p^-j| = {worst:.2e} <= 2e-5")


@pytest.mark.criterion("3b")
def test_prime_exponents_joint_pairs(criterion):
    pts = rectangle(1000, 1000).points()
    worst = 0.0
    for p in (2, 3, 5):
        e1 = arith.lambda_p_array(pts[:, 0], p)
        e2 = arith.lambda_p_array(pts[:, 1], p)
        emp = Counter(zip(e1.tolist(), e2.tolist()))
        total = len(pts)
        seen = 0.0
        tv = 0.0
        for (a, b), c in emp.items():
            q = _geometric_pmf(p, a) * _geometric_pmf(p, b)
            tv += abs(c / total - q)
            seen += q
        tv = (tv + (1 - seen)) / 2
        worst = max(worst, tv)
    criterion(worst <= 0.005, f"rectangle(1000,1000), max_p TV(joint exponents, product law) = {worst:.5f} <= 0.005")


@pytest.mark.criterion("4")
def test_mean_value_universality(criterion):
    F = multfunc.builtin_coprime_indicator(2)
    euler = multfunc.mean_value(F, d=2).value.real
    means = {
        "rectangle(1500,1500)": multfunc.empirical_mean(F, rectangle(1500, 1500)),
        "ball(2,3e6)": multfunc.empirical_mean(F, ball(2, 3 * 10**6)),
        "hyperbolic(2,2e5)": multfunc.empirical_mean(F, hyperbolic(2, 2 * 10**5)),
    }
    gaps = {k: abs(float(v) - euler) for k, v in means.items()}
    euler_err = abs(euler - 1 / ZETA2)
    detail = ", ".join(f"{k}: {g:.4f}" for k, g in gaps.items())
    criterion(max(gaps.values()) <= 0.015 and euler_err <= 1e-4,
              f"|mean - M(F)| <= 0.015 ({detail}); |M(F) - 1/zeta(2)| = {euler_err:.1e} <= 1e-4")


@pytest.mark.criterion("5")
def test_gcd_moment_three_dimensions(criterion):
    m = float(multfunc.empirical_mean(multfunc.builtin_gcd(3), rectangle(200, 200, 200)))
    target = limitlaw.gcd_limit_moment(3, 1)
    ref_ok = abs(target - arith.zeta(2) / arith.zeta(3)) < 1e-12
    criterion(abs(m - target) <= 0.03 and ref_ok, f"E[gcd] on rectangle(200^3) = {m:.5f}, target {target:.5f}, tol 0.03")


@pytest.mark.criterion("6")
def test_lcm_ratio_universality(criterion):
    F = multfunc.builtin_lcm_ratio(2)
    N = 10**5
    rect = stats.monte_carlo_distribution(F, rectangle(10**5, 10**5), N, limitlaw.worker_rng(SEED, 60))
    hyp = stats.monte_carlo_distribution(F, hyperbolic(2, 10**6), N, limitlaw.worker_rng(SEED, 61),
                                         strategy="materialized")
    ref = stats.f_infinity_reference(F, limitlaw.LimitSampleConfig(1000, 2), limitlaw.worker_rng(SEED, 62), N)
    ks_rh = float(stats.ks_distance(rect, hyp))
    ks_r = float(stats.ks_distance(rect, ref))
    ks_h = float(stats.ks_distance(hyp, ref))
    criterion(max(ks_rh, ks_r, ks_h) <= 0.02,
              f"KS(rect,hyp)={ks_rh:.4f}, KS(rect,F_inf)={ks_r:.4f}, KS(hyp,F_inf)={ks_h:.4f}, all <= 0.02")


@pytest.mark.criterion("7a")
def test_hyperbolic_regular_growth(criterion):
    fam = DomainFamily.from_spec({"type": "hyperbolic", "params": {"d": 2}}, [10**3, 10**4, 10**5])
    rep = diagnostics.regular_growth_check(fam)
    seqs = [rep.ratios(diagnostics.unit_shift(k, 2)) for k in range(2)]
    text = "; ".join(", ".join(f"{r:.4f}" for r in s) for s in seqs)
    criterion(rep.flags["regular_growth_consistent"], f"unit-shift ratios strictly decrease, final <= 0.25 ({text})")


@pytest.mark.criterion("7b")
def test_rectangle_growth_ratio_exact(criterion):
    ok = True
    for n in (10, 37, 200):
        D = rectangle(n, n)
        for k in range(2):
            delta = diagnostics.symdiff_shift_count(D, diagnostics.unit_shift(k, 2))
            ok &= Fraction(delta, D.cardinality) == Fraction(2, n)
    criterion(ok, "rectangle(n,n) unit-shift ratio == 2/n exactly for n in {10, 37, 200}")


@pytest.mark.criterion("8a")
def test_K_bound_sublevel_domains(criterion):
    domains = {
        "hyperbolic(2,1e4)": hyperbolic(2, 10**4),
        "hyperbolic(3,2000)": hyperbolic(3, 2000),
        "ball(2,1e4)": ball(2, 10**4),
        "tetrahedron((1,2),500)": tetrahedron((1, 2), 500),
        "sym_poly(2,3,300)": sym_poly_hyperbolic(2, 3, 300),
        "rectangle(97,131)": rectangle(97, 131),
        "weyl_chamber(2,200)": weyl_chamber(2, 200),
    }
    ks = {k: diagnostics.estimate_K(D).value for k, D in domains.items()}
    sublevel = {k: v for k, v in ks.items() if k != "weyl_chamber(2,200)"}
    detail = ", ".join(f"{k}: {float(v):.4f}" for k, v in ks.items())
    criterion(all(v <= 1 for v in sublevel.values()), f"estimate_K <= 1 on a,b <= 30 for sublevel domains ({detail})")


@pytest.mark.criterion("8b")
def test_K_bound_ball_finite(criterion):
    K = diagnostics.estimate_K(ball(2, 10**4)).value
    criterion(K <= 2, f"estimate_K(ball(2,1e4)) = {float(K):.4f} <= 2")


@pytest.mark.criterion("9")
def test_residue_uniformity_ball_family(criterion):
    fam = DomainFamily.from_spec({"type": "ball", "params": {"d": 2}}, [10**3, 10**4, 10**5])
    u = diagnostics.uniformity_report(fam, [(2, 3)])["2,3"]
    errs = list(u["errors"].values())
    criterion(u["decreasing"] and errs[-1] <= 0.01,
              "residue errors for moduli (2,3): " + ", ".join(f"{e:.5f}" for e in errs) + " decrease, final <= 0.01")


@pytest.mark.criterion("10")
def test_cardinality_asymptotics(criterion):
    n = 10**6
    h = hyperbolic(2, n).cardinality
    oracle = sum(n // k for k in range(1, n + 1))
    r_h = h / (n * math.log(n))
    m = 2000
    r_t = tetrahedron((1, 1), m).cardinality * 2 / m**2
    criterion(h == oracle and 1.0 <= r_h <= 1.05 and abs(r_t - 1) <= 0.05,
              f"#H(2,1e6)/(n ln n) = {r_h:.4f} in [1, 1.05]; 2#T/n^2 at n=2000 = {r_t:.4f} within 5% of 1")


PROPERTY_SUITES = ["test_arith.py", "test_multfunc.py", "test_domains.py", "test_stats.py",
                   "test_diagnostics.py", "test_limitlaw.py"]


@pytest.mark.criterion("11")
def test_property_suites(criterion):
    here = Path(__file__).parent
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(here / s) for s in PROPERTY_SUITES]],
                          capture_output=True, text=True, timeout=600)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    criterion(proc.returncode == 0 and elapsed < 300, f"property suites: {tail} ({elapsed:.0f}s < 300s)")
