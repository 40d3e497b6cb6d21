import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfint.errors import ChecksumError, FormatError
from halfint.qseries import (
    CoeffTable,
    PowerSeries,
    delta_halfintegral,
    delta_halfintegral_reference,
    delta_integral,
    eisenstein_g,
    load_coeffs,
    poly_mul_exact,
    ps_derivative_over_2pii,
    ps_dilate,
    ps_mul,
    save_coeffs,
    theta_series,
    u_operator,
    zeta_neg,
)

small_series = st.lists(
    st.integers(min_value=-9, max_value=9), min_size=1, max_size=24
).map(PowerSeries)


def naive_mul(a, b):
    n = min(a.truncation, b.truncation)
    out = [Fraction(0)] * (n + 1)
    for k in range(n + 1):
        out[k] = sum(a.coeffs[i] * b.coeffs[k - i] for i in range(k + 1))
    return PowerSeries(out)


def lattice_r2(n):
    count = 0
    m = math.isqrt(n) + 1
    for a in range(-m, m + 1):
        for b in range(-m, m + 1):
            if a * a + b * b == n:
                count += 1
    return count


class TestPowerSeriesOps:
    def test_mul_simple(self):
        a = PowerSeries([1, 1, 0])
        b = PowerSeries([1, -1, 0])
        assert ps_mul(a, b).coeffs == [1, 0, -1]

    def test_theta_squared_counts_lattice_points(self):
        th = theta_series(8)
        sq = ps_mul(th, th)
        assert [int(c) for c in sq.coeffs] == [lattice_r2(n) for n in range(9)]

    def test_pentagonal_squared_vs_naive(self):
        # sparse Euler product factor against the dense quadratic oracle
        coeffs = [Fraction(0)] * 101
        m = 0
        while m * (3 * m - 1) // 2 <= 100:
            for mm in (m, -m):
                idx = mm * (3 * mm - 1) // 2
                if 0 <= idx <= 100:
                    coeffs[idx] = Fraction((-1) ** mm)
            m += 1
        pent = PowerSeries(coeffs)
        assert ps_mul(pent, pent) == naive_mul(pent, pent)

    @settings(max_examples=60, derandomize=True)
    @given(a=small_series, b=small_series)
    def test_mul_matches_naive(self, a, b):
        assert ps_mul(a, b) == naive_mul(a, b)

    def test_truncation_is_min(self):
        a = PowerSeries([1] * 10)
        b = PowerSeries([1] * 4)
        assert ps_mul(a, b).truncation == 3

    def test_derivative(self):
        th = theta_series(9)
        d = ps_derivative_over_2pii(th)
        expect = [0] * 10
        for m in (1, 2, 3):
            expect[m * m] = 2 * m * m
        assert [int(c) for c in d.coeffs] == expect

    def test_derivative_of_constant(self):
        c = PowerSeries([5, 0, 0])
        assert ps_derivative_over_2pii(c).coeffs == [0, 0, 0]

    @settings(max_examples=40, derandomize=True)
    @given(a=small_series, b=small_series)
    def test_derivative_linear(self, a, b):
        n = min(a.truncation, b.truncation)
        lhs = ps_derivative_over_2pii(a + b)
        rhs = ps_derivative_over_2pii(a) + ps_derivative_over_2pii(b)
        assert lhs.coeffs[: n + 1] == rhs.coeffs[: n + 1]

    def test_dilate(self):
        a = PowerSeries([1, 1, 0, 0, 0])
        assert ps_dilate(a, 4).coeffs == [1, 0, 0, 0, 1]

    def test_dilate_constant_term_of_g4(self):
        g4 = eisenstein_g(4, 8)
        assert ps_dilate(g4, 4).coeffs[0] == Fraction(1, 240)

    @settings(max_examples=40, derandomize=True)
    @given(a=small_series)
    def test_dilate_composes(self, a):
        assert ps_dilate(ps_dilate(a, 2), 3) == ps_dilate(a, 6)

    def test_u_operator_on_theta_squared(self):
        sq = ps_mul(theta_series(8), theta_series(8))
        assert int(u_operator(sq, 4).coeffs[1]) == 4

    def test_u1_identity(self):
        th = theta_series(20)
        assert u_operator(th, 1) == th

    @settings(max_examples=40, derandomize=True)
    @given(a=small_series)
    def test_u_composes(self, a):
        assert u_operator(u_operator(a, 2), 2) == u_operator(a, 4)


class TestConstructors:
    def test_theta_values(self):
        th = theta_series(10)
        assert int(th.coeffs[0]) == 1
        assert int(th.coeffs[4]) == 2
        assert int(th.coeffs[3]) == 0

    def test_g4_values(self):
        g4 = eisenstein_g(4, 6)
        assert g4.coeffs[0] == Fraction(1, 240)
        assert int(g4.coeffs[1]) == 1
        assert int(g4.coeffs[6]) == 252

    def test_zeta_negative_odd(self):
        assert zeta_neg(4) == Fraction(1, 120)  # zeta(-3)
        assert zeta_neg(2) == Fraction(-1, 12)  # zeta(-1)

    def test_odd_weight_rejected(self):
        with pytest.raises(ValueError):
            eisenstein_g(5, 10)


class TestDeltaHalfIntegral:
    def test_leading_values(self):
        t = delta_halfintegral(20)
        assert t.a(1) == 1
        assert t.a(4) == -56
        assert t.a(2) == 0 and t.a(3) == 0

    def test_fast_equals_reference_to_2000(self):
        fast = delta_halfintegral(2000)
        ref = delta_halfintegral_reference(2000)
        assert fast.alpha == ref.alpha

    def test_plus_space_support(self, big_table):
        assert big_table.support_violations().size == 0

    def test_integrality_via_reference(self):
        # the 1/240 constant term must cancel; the reference asserts this
        ref = delta_halfintegral_reference(300)
        assert all(isinstance(v, int) for v in ref.alpha)

    def test_parseval_band(self, big_table, pins):
        c2 = big_table.c_array() ** 2
        cs = np.cumsum(c2)
        ratios = []
        X = 16384
        while X <= big_table.N:
            ratios.append(cs[X] / X)
            X *= 2
        lo, hi = min(ratios), max(ratios)
        assert 0 < lo <= hi
        pinned = pins["parseval_ratios"]
        for X_str, val in pinned.items():
            got = cs[int(X_str)] / int(X_str)
            assert got == pytest.approx(val, rel=1e-6)


class TestTau:
    def test_leading_values(self):
        tau = delta_integral(10)
        assert tau[1] == 1
        assert tau[2] == -24

    def test_hecke_multiplicativity(self):
        tau = delta_integral(40)
        assert tau[6] == tau[2] * tau[3]
        assert tau[10] == tau[2] * tau[5]
        assert tau[4] == tau[2] ** 2 - 2**11

    def test_sparse_route_vs_naive_product(self):
        from halfint.cli import _tau_naive

        assert delta_integral(2000) == _tau_naive(2000)

    def test_poly_mul_exact_roundtrip(self):
        rng = np.random.default_rng(11)
        a = [int(v) for v in rng.integers(-(10**6), 10**6, size=60)]
        b = [int(v) for v in rng.integers(-(10**6), 10**6, size=45)]
        got = poly_mul_exact(a, b)
        want = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                want[i + j] += ai * bj
        assert got == want
        assert poly_mul_exact(a, b, trunc=30) == want[:31]


class TestCoeffCache:
    def test_roundtrip(self, tmp_path):
        t = delta_halfintegral(10_000)
        path = tmp_path / "t.hicf"
        save_coeffs(t, str(path))
        back = load_coeffs(str(path))
        assert back.weight_times_two == 13
        assert back.N == t.N
        assert back.alpha == t.alpha

    def test_truncated_file_fails_checksum(self, tmp_path):
        t = delta_halfintegral(500)
        path = tmp_path / "t.hicf"
        save_coeffs(t, str(path))
        data = path.read_bytes()
        path.write_bytes(data[:-20])
        with pytest.raises(ChecksumError):
            load_coeffs(str(path))

    def test_corrupted_payload_fails_checksum(self, tmp_path):
        t = delta_halfintegral(500)
        path = tmp_path / "t.hicf"
        save_coeffs(t, str(path))
        data = bytearray(path.read_bytes())
        data[40] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(ChecksumError):
            load_coeffs(str(path))

    def test_wrong_magic_is_format_error(self, tmp_path):
        path = tmp_path / "t.hicf"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(FormatError):
            load_coeffs(str(path))

    def test_csv_roundtrip(self, tmp_path):
        t = delta_halfintegral(300)
        path = tmp_path / "t.csv"
        save_coeffs(t, str(path))
        back = load_coeffs(str(path))
        assert back.alpha == t.alpha

    def test_csv_headerless_accepted(self, tmp_path):
        t = delta_halfintegral(50)
        path = tmp_path / "bare.csv"
        path.write_text("".join(f"{n},{t.alpha[n]}\n" for n in range(1, 51)))
        assert load_coeffs(str(path)).alpha == t.alpha

    def test_table_validation(self):
        with pytest.raises(ValueError):
            CoeffTable(weight_times_two=12, alpha=[0, 1], N=1)
        with pytest.raises(ValueError):
            CoeffTable(weight_times_two=13, alpha=[0, 1, 2], N=1)
