import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multdomains import arith, multfunc
from multdomains.domains import ball, hyperbolic, rectangle
from multdomains.errors import ConfigError, ResourceError, SingularValueError, SummabilityError

TABLE = arith.build_spf_table(10**6)
CODED = ["gcd", "lcm_ratio", "coprime", "one"]


def brute_lcm_ratio(xs):
    return Fraction(math.lcm(*xs), math.prod(xs))


def test_evaluate_examples():
    assert multfunc.builtin_gcd(2)(12, 18) == 6
    assert multfunc.builtin_lcm_ratio(2)(4, 6) == Fraction(1, 2)
    assert multfunc.builtin_coprime_indicator(2)(9, 16) == 1
    assert multfunc.builtin_coprime_indicator(2)(9, 15) == 0
    assert multfunc.builtin_one(3)(5, 7, 9) == 1
    assert multfunc.builtin_gcd(3)(1, 1, 1) == 1


def test_kernel_path_matches_brute_force_on_random_points():
    rng = np.random.default_rng(5)
    pts = rng.integers(1, 10**5, size=(10**4, 3))
    gcd, lcm = multfunc.builtin_gcd(3), multfunc.builtin_lcm_ratio(3)
    for row in pts[:2000].tolist():
        assert multfunc.evaluate(gcd, row, TABLE) == math.gcd(*row)
        assert multfunc.evaluate(lcm, row, TABLE) == brute_lcm_ratio(row)
    # the vectorised codes agree on all 10^4 points
    assert multfunc.values_at(gcd, pts) == [math.gcd(*r) for r in pts.tolist()]
    assert multfunc.values_at(lcm, pts) == [brute_lcm_ratio(r) for r in pts.tolist()]


def test_lcm_codes_big_integer_fallback():
    pts = np.array([[10**9 + 7, 10**9 + 9, 6], [2**20, 2**21, 2**22]])
    assert multfunc.values_at(multfunc.builtin_lcm_ratio(3), pts) == [brute_lcm_ratio(r) for r in pts.tolist()]


coprime_pairs = st.tuples(
    st.lists(st.integers(1, 300), min_size=2, max_size=2),
    st.lists(st.integers(1, 300), min_size=2, max_size=2),
).filter(lambda mn: math.gcd(math.prod(mn[0]), math.prod(mn[1])) == 1)


@settings(max_examples=200)
@given(coprime_pairs, st.sampled_from(CODED + ["gcd_power", "demo_log_inv_p"]))
def test_multiplicativity(mn, name):
    m, n = mn
    F = multfunc.builtin(name, d=2, **({"s": 0.5} if name == "gcd_power" else {}))
    mn_prod = [a * b for a, b in zip(m, n)]
    lhs = F(*mn_prod, table=TABLE)
    rhs = F(*m, table=TABLE) * F(*n, table=TABLE)
    if isinstance(lhs, float):
        assert lhs == pytest.approx(rhs, rel=1e-12)
    else:
        assert lhs == rhs


def test_value_counts_generic_path_matches_coded():
    gcd = multfunc.builtin_gcd(2)
    plain = multfunc.MultiplicativeFunction(gcd.kernel, "gcd_kernel_only", 2)
    D = hyperbolic(2, 500)
    assert multfunc.value_counts(plain, D) == multfunc.value_counts(gcd, D)


def test_value_counts_budget():
    with pytest.raises(ResourceError):
        multfunc.value_counts(multfunc.builtin_gcd(2), rectangle(100, 100), budget=100)
    plain = multfunc.MultiplicativeFunction(lambda p, e: 1, "slow", 2)
    with pytest.raises(ResourceError):
        multfunc.value_counts(plain, rectangle(2000, 1000))


def test_empirical_mean_exact():
    D = rectangle(6, 6)
    m = multfunc.empirical_mean(multfunc.builtin_gcd(2), D)
    assert m == Fraction(sum(math.gcd(a, b) for a in range(1, 7) for b in range(1, 7)), 36)
    assert multfunc.empirical_mean(multfunc.builtin_one(2), ball(2, 100)) == 1
    assert float(multfunc.empirical_mean(multfunc.builtin_coprime_indicator(2), rectangle(100, 100))) == pytest.approx(0.6087)


def test_coprime_mean_on_squares_approaches_limit():
    F = multfunc.builtin_coprime_indicator(2)
    target = 6 / math.pi**2
    errs = []
    for n in (100, 1000, 3000):
        err = abs(float(multfunc.empirical_mean(F, rectangle(n, n))) - target)
        assert err <= 2 * math.log(n) / n
        errs.append(err)
    assert errs == sorted(errs, reverse=True)


def test_compositions():
    assert set(multfunc.compositions(2, 2)) == {(0, 2), (1, 1), (2, 0)}
    assert len(multfunc.compositions(5, 3)) == math.comb(7, 2)
    assert all(sum(e) == 4 for e in multfunc.compositions(4, 3))


def test_mean_value_coprime_converges_with_cutoff():
    F = multfunc.builtin_coprime_indicator(2)
    errs = [abs(multfunc.mean_value(F, P).value.real - 1 / arith.zeta(2)) for P in (100, 1000, 10**4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


@pytest.mark.parametrize("d", [2, 3, 4])
def test_mean_value_coprime_is_inverse_zeta(d):
    mv = multfunc.mean_value(multfunc.builtin_coprime_indicator(d), 10**4)
    assert mv.value.real == pytest.approx(1 / arith.zeta(d), abs=2e-4)
    assert mv.value.imag == 0


def test_mean_value_gcd_three_dimensions():
    mv = multfunc.mean_value(multfunc.builtin_gcd(3))
    assert mv.value.real == pytest.approx(arith.zeta(2) / arith.zeta(3), abs=1e-4)
    cert = mv.certificate
    assert cert["prime_cutoff"] == 10**4 and cert["max_prime_tail_bound"] < cert["tau"]


def test_mean_value_of_one():
    mv = multfunc.mean_value(multfunc.builtin_one(2), 1000)
    assert abs(mv.value - 1) <= 1e-6


def test_mean_value_summability_error():
    with pytest.raises(SummabilityError):
        multfunc.mean_value(multfunc.builtin_gcd_power(2.0, 2), 100)
    with pytest.raises(ConfigError):
        multfunc.mean_value(multfunc.builtin_gcd(), 100)


def test_series_check_builtin_is_trivially_convergent():
    r = multfunc.three_series_check(multfunc.builtin_gcd(2), prime_cutoff=1000)
    assert (r.S1, r.S2, r.S3) == (0.0, 0j, 0.0)
    assert r.three_series_convergent and r.two_series_convergent


def test_series_check_divergent_demo():
    r = multfunc.three_series_check(multfunc.demo_log_one(1), prime_cutoff=1000)
    # sum_{p <= 1000} 1/p
    assert r.S2.real == pytest.approx(sum(1 / p for p in arith.primes_up_to(1000)))
    assert r.S2.real == pytest.approx(2.19808, abs=1e-5)
    assert not r.three_series_convergent
    assert not multfunc.three_series_check(multfunc.demo_log_one(2)).convergent


def test_series_check_convergent_demo():
    r = multfunc.two_series_check(multfunc.demo_log_inv_p(2))
    assert r.three_series_convergent and r.two_series_convergent
    assert r.S3 == pytest.approx(2 * sum(p**-3 for p in arith.primes_up_to(10**4)))


def test_series_check_branch_cut_and_singular():
    neg = multfunc.MultiplicativeFunction(lambda p, e: (-1) ** sum(e), "liouville_like", 1)
    r = multfunc.three_series_check(neg, prime_cutoff=100)
    assert r.branch_cut_incidents == 25 and not r.convergent
    assert multfunc.three_series_check(neg, prime_cutoff=100, allowance=25).branch_cut_incidents == 25
    with pytest.raises(SingularValueError):
        multfunc.f_i_log(multfunc.MultiplicativeFunction(lambda p, e: 0, "zero", 1), 0, 2)
    with pytest.raises(ConfigError):
        multfunc.three_series_check(neg, A=0)


def test_builtin_registry():
    assert multfunc.builtin("gcd_power", d=2, s=0.5).params == {"s": 0.5}
    with pytest.raises(ConfigError):
        multfunc.builtin("nope")


def test_code_counts():
    pts = np.array([[2, 4], [3, 9], [5, 7], [6, 6]])
    assert multfunc.code_counts(multfunc.builtin_gcd(2), pts) == Counter({2: 1, 3: 1, 1: 1, 6: 1})


def test_threaded_tally_matches_serial():
    D = hyperbolic(2, 3 * 10**5)
    F = multfunc.builtin_lcm_ratio(2)
    assert multfunc.value_counts(F, D, threads=4) == multfunc.value_counts(F, D)
    with pytest.raises(ConfigError):
        multfunc.value_counts(F, D, threads=0)
