import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfint.arith import (
    build_sieves,
    enumerate_nflat,
    factorize,
    factorize_small,
    is_fundamental_discriminant,
    kronecker,
    odd_squarefree_flags,
    primes_up_to,
)
from halfint.errors import CapacityError


@pytest.fixture(scope="module")
def tables():
    return build_sieves(10_000)


def sigma3_direct(n):
    return sum(d**3 for d in range(1, n + 1) if n % d == 0)


class TestSieves:
    def test_spot_values(self, tables):
        assert tables.mu[6] == 1
        assert tables.mu[4] == 0
        assert int(tables.sigma3[6]) == 252 == sigma3_direct(6)

    def test_empty_product_conventions(self, tables):
        assert tables.phi[1] == 1
        assert tables.mu[1] == 1
        assert tables.big_omega[1] == 0

    def test_liouville_at_8(self, tables):
        # 8 = 2^3 by hand
        assert tables.big_omega[8] == 3
        assert tables.liouville[8] == -1

    def test_mu_squared_is_squarefree(self, tables):
        mu = tables.mu[2:]
        assert np.array_equal(mu * mu != 0, tables.squarefree[2:])

    def test_liouville_parity(self, tables):
        expect = np.where(tables.big_omega[1:] % 2 == 0, 1, -1)
        assert np.array_equal(tables.liouville[1:], expect)

    def test_sigma3_at_primes(self, tables):
        for p in tables.primes[:200]:
            assert int(tables.sigma3[p]) == 1 + int(p) ** 3

    def test_sigma3_against_divisor_enumeration(self, tables):
        for n in range(1, 300):
            assert int(tables.sigma3[n]) == sigma3_direct(n)

    def test_multiplicativity_spot(self, tables):
        rng = np.random.default_rng(7)
        for _ in range(200):
            m = int(rng.integers(2, 90))
            n = int(rng.integers(2, 90))
            if np.gcd(m, n) != 1:
                continue
            assert int(tables.phi[m * n]) == int(tables.phi[m]) * int(tables.phi[n])
            assert int(tables.sigma3[m * n]) == int(tables.sigma3[m]) * int(
                tables.sigma3[n]
            )

    def test_mobius_inversion(self, tables):
        # sum_{d|n} mu(d) = [n == 1]
        for n in range(1, 10_000, 97):
            acc = sum(int(tables.mu[d]) for d in range(1, n + 1) if n % d == 0)
            assert acc == (1 if n == 1 else 0)

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            build_sieves(10_000, memory_budget=1000)


class TestKronecker:
    def test_unit_top(self):
        assert kronecker(1, 57) == 1

    def test_at_two(self):
        # bottom 2 depends on d mod 8
        assert kronecker(5, 2) == -1
        assert kronecker(7, 2) == 1
        assert kronecker(4, 2) == 0

    def test_eight_over_three(self):
        # (8|3) = (2|3)^3 = -1; Euler criterion 2^((3-1)/2) = 2 = -1 mod 3
        assert kronecker(8, 3) == -1
        assert pow(2, 1, 3) == 3 - 1

    def test_conventions_at_zero_and_minus_one(self):
        assert kronecker(1, 0) == 1
        assert kronecker(-1, 0) == 1
        assert kronecker(5, 0) == 0
        assert kronecker(7, -1) == 1
        assert kronecker(-7, -1) == -1
        with pytest.raises(ValueError):
            kronecker(0, 0)

    def test_euler_criterion_oracle(self):
        for d in (1, 5, 8, 12, 13, -3, -4, 21):
            for p in primes_up_to(200):
                if p == 2 or d % p == 0:
                    continue
                euler = pow(d % p, (p - 1) // 2, p)
                expect = 1 if euler == 1 else -1
                assert kronecker(d, p) == expect

    @settings(max_examples=200, derandomize=True)
    @given(
        d=st.integers(min_value=-400, max_value=400),
        m=st.integers(min_value=1, max_value=400),
        n=st.integers(min_value=1, max_value=400),
    )
    def test_completely_multiplicative(self, d, m, n):
        if d == 0:
            return
        assert kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)

    def test_jacobi_row_periodic(self):
        for n in (9, 15, 45):
            for a in range(-n, 2 * n):
                assert kronecker(a, n) == kronecker(a % n, n)


class TestFundamentalDiscriminants:
    def test_examples(self):
        assert is_fundamental_discriminant(8)
        assert is_fundamental_discriminant(1)
        assert not is_fundamental_discriminant(9)

    def test_negative_side(self):
        assert is_fundamental_discriminant(-3)
        assert is_fundamental_discriminant(-4)
        assert is_fundamental_discriminant(-8)
        assert not is_fundamental_discriminant(-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            is_fundamental_discriminant(0)


class TestNflat:
    def test_small(self):
        assert enumerate_nflat(50) == [8, 24, 40]
        assert enumerate_nflat(7) == []

    def test_count_at_2e5(self):
        # consistent with the count used by the sign-change tables
        assert len(enumerate_nflat(200_000)) == 10134

    def test_members_are_fundamental_and_sorted(self):
        lst = enumerate_nflat(3000)
        assert lst == sorted(lst)
        for d in lst:
            assert is_fundamental_discriminant(d)
            m = d // 8
            assert m % 2 == 1

    def test_roundtrip_predicate(self):
        flags = odd_squarefree_flags(400)
        members = set(enumerate_nflat(3200))
        for m in range(1, 401):
            assert ((8 * m) in members) == bool(flags[m])

    def test_segmented_iterator_matches_dense(self):
        from halfint.arith import iter_nflat

        for X in (7, 8, 1000, 54_321):
            assert list(iter_nflat(X, segment=97)) == enumerate_nflat(X)


class TestFactorize:
    def test_examples(self, tables):
        assert factorize(12, tables).prime_powers == ((2, 2), (3, 1))
        assert factorize(1, tables).prime_powers == ()
        assert factorize(9800, tables).prime_powers == ((2, 3), (5, 2), (7, 2))

    def test_product_reconstructs(self, tables):
        rng = np.random.default_rng(3)
        for n in rng.integers(1, 10_000, size=200):
            f = factorize(int(n), tables)
            prod = 1
            for p, e in f.prime_powers:
                prod *= p**e
            assert prod == n

    def test_out_of_range(self, tables):
        with pytest.raises(ValueError):
            factorize(10_001, tables)

    def test_small_matches_sieved(self, tables):
        for n in range(1, 500):
            assert factorize_small(n) == factorize(n, tables)
