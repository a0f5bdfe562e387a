import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multdomains import arith
from multdomains.errors import ConfigError, DomainError, OutOfRangeError, ResourceError

TABLE = arith.build_spf_table(10**6)


def trial_division(n):
    out, p = {}, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def test_spf_table_small_values():
    assert TABLE.spf[2:13].tolist() == [2, 3, 2, 5, 2, 7, 2, 3, 2, 11, 2]
    assert not TABLE.spf.flags.writeable


def test_spf_against_trial_division():
    for n in range(2, 5000):
        assert TABLE.spf[n] == min(trial_division(n))


def test_sieve_budget_and_limit_errors():
    with pytest.raises(ResourceError):
        arith.build_spf_table(10**6, memory_budget=1000)
    with pytest.raises(ConfigError):
        arith.build_spf_table(1)


def test_factorize_examples():
    assert arith.factorize(360, TABLE) == {2: 3, 3: 2, 5: 1}
    assert arith.factorize(1, TABLE).entries == {}
    assert arith.factorize(999983, TABLE) == {999983: 1}


def test_factorize_out_of_range():
    with pytest.raises(OutOfRangeError):
        arith.factorize(10**6 + 1, TABLE)
    with pytest.raises(OutOfRangeError):
        arith.factorize(0, TABLE)


def test_round_trip_all_up_to_a_million():
    # vectorised check of reconstruct(factorize(n)) = n over the whole table range
    n = np.arange(2, 10**6 + 1)
    rest, prod = n.copy(), np.ones_like(n)
    while (rest > 1).any():
        p = TABLE.spf[rest].astype(np.int64)
        live = rest > 1
        prod[live] *= p[live]
        rest[live] //= p[live]
    assert np.array_equal(prod, n)


@given(st.integers(1, 10**6))
def test_round_trip_and_trial_division(n):
    v = arith.factorize(n, TABLE)
    assert arith.reconstruct(v) == n
    assert v == trial_division(n)


@given(st.integers(1, 1000), st.integers(1, 1000), st.sampled_from([2, 3, 5, 7, 11, 997]))
def test_lambda_p_additive(m, n, p):
    assert arith.lambda_p(m * n, p, TABLE) == arith.lambda_p(m, p, TABLE) + arith.lambda_p(n, p, TABLE)


def test_lambda_p_array_matches_scalar():
    xs = np.arange(1, 3000)
    for p in (2, 3, 7):
        assert arith.lambda_p_array(xs, p).tolist() == [arith.lambda_p(int(x), p, TABLE) for x in xs]


def test_lambda_p_examples():
    assert arith.lambda_p(48, 2, TABLE) == 4
    assert arith.lambda_p(48, 5, TABLE) == 0


def test_gcd_lcm_via_exponents_agree_with_euclid():
    rng = np.random.default_rng(7)
    pairs = rng.integers(1, 10**6, size=(10**4, 2))
    for a, b in pairs.tolist():
        fa, fb = arith.factorize(a, TABLE), arith.factorize(b, TABLE)
        g = arith.exponent_min([fa, fb]).value()
        assert g == math.gcd(a, b) == arith.euclid_gcd([a, b])
        assert arith.exponent_max([fa, fb]).value() == a * b // g


def test_exponent_vector_algebra():
    a, b = arith.factorize(12, TABLE), arith.factorize(18, TABLE)
    assert arith.exponent_sum([a, b]).value() == 216
    ratio = arith.exponent_max([a, b]) - arith.exponent_sum([a, b])
    assert ratio.value() == Fraction(36, 216)
    assert arith.PrimeExponentVector({2: 0, 3: 1}) == {3: 1}
    with pytest.raises(ConfigError):
        arith.exponent_min([])


def test_primes():
    assert arith.primes_up_to(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert len(arith.primes_array(10**6)) == 78498
    assert arith.primes_array(2).tolist() == [2]


@pytest.mark.parametrize("s, expected", [(2, math.pi**2 / 6), (4, math.pi**4 / 90), (6, math.pi**6 / 945),
                                         (3, 1.2020569031595942)])
def test_zeta_values(s, expected):
    assert arith.zeta(s) == pytest.approx(expected, rel=1e-11)


def test_zeta_monotone_on_grid():
    vals = [arith.zeta(s) for s in (1.5, 2, 3, 4, 6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_zeta_errors():
    with pytest.raises(DomainError):
        arith.zeta(1.0)
    with pytest.raises(ConfigError):
        arith.zeta(2, rel_tol=0)
    with pytest.raises(ResourceError):
        arith.zeta(1.01, rel_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.2, 20))
def test_zeta_above_one_and_decreasing(s):
    z = arith.zeta(s, rel_tol=1e-9)
    assert z > 1
    assert arith.zeta(s + 0.1, rel_tol=1e-9) < z
