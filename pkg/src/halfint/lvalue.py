"""Central values of quadratic-twist L-functions by the approximate
functional equation, with a rigorous truncation bound, plus the ratio test
against the squared coefficients and the self-normalized twisted first
moment.

Kernel. The smoothing kernel is the vertical-line integral of
Gamma(s+k)/(Gamma(k) s) (2 pi x)^{-s}; by the Mellin pair
int_0^inf Gamma(k, y) y^{s-1} dy = Gamma(s+k)/s it equals the normalized
upper incomplete gamma

    W(x) = Gamma(k, 2 pi x) / Gamma(k) = e^{-2 pi x} sum_{m<k} (2 pi x)^m/m!.

`w_kernel` implements the closed form; `w_kernel_oracle` evaluates the
contour integral numerically and exists only to certify the derivation.

Central value. For a fundamental discriminant d > 0 (the sign that makes the
completed function even for an even-k lift) the two halves of the functional
equation coincide at the center, so

    L(1/2) = 2 sum_{n <= N0} lambda(n) chi_d(n) n^{-1/2} W(n/d),

and for d < 0 the value is an exact forced zero. The tail past N0 is bounded
using |lambda(n)| <= d(n) <= sqrt(3 n) and the inequality
W(x + u) <= W(x) e^{-pi u} for x >= (k-1)/pi, which follows from
sum_{m<k} y^m/m! <= 2 y^{k-1}/(k-1)! for y >= 2(k-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import loggamma

from .arith import factorize_small, is_fundamental_discriminant, kronecker
from .errors import ConvergenceError, InconsistencyError, InsufficientTableError
from .hecke import HeckeTable
from .qseries import CoeffTable

__all__ = [
    "LValueResult",
    "w_kernel",
    "w_kernel_oracle",
    "central_lvalue",
    "waldspurger_ratio",
    "a_factor",
    "first_moment_scan",
    "bump_window",
    "chi_array",
]


@dataclass(frozen=True)
class LValueResult:
    d: int
    value: float
    truncation_bound: float
    terms_used: int
    root_number: int

    @property
    def forced_zero(self) -> bool:
        return self.root_number == -1


def w_kernel(x: float, k: int) -> float:
    """W(x) = e^{-2 pi x} sum_{m<k} (2 pi x)^m / m! for x > 0."""
    if x <= 0:
        raise ValueError("kernel argument must be positive")
    if k < 2:
        raise ValueError("k must be an integer >= 2")
    y = 2.0 * math.pi * x
    term = 1.0
    acc = 1.0
    for m in range(1, k):
        term *= y / m
        acc += term
    return math.exp(-y) * acc


def _w_kernel_vec(x: np.ndarray, k: int) -> np.ndarray:
    y = 2.0 * np.pi * x
    acc = np.ones_like(y)
    term = np.ones_like(y)
    for m in range(1, k):
        term = term * y / m
        acc += term
    return np.exp(-y) * acc


def w_kernel_oracle(
    x: float,
    k: int,
    contour_real_part: float = 1.0,
    quadrature_step: float = 0.02,
    quadrature_span: float = 60.0,
    tail_tol: float = 1e-12,
) -> float:
    """Trapezoidal evaluation of the defining vertical-line integral.

    Validation oracle only: independent of the closed form above (complex
    log-gamma from scipy, plain quadrature).
    """
    if x <= 0:
        raise ValueError("kernel argument must be positive")
    c = contour_real_part
    if c <= 0:
        raise ValueError("contour must lie right of the pole at s=0")
    t = np.arange(-quadrature_span, quadrature_span + quadrature_step, quadrature_step)
    s = c + 1j * t
    vals = np.exp(loggamma(s + k) - loggamma(k) - s * math.log(2 * math.pi * x)) / s
    # Gamma decay e^{-pi|t|/2} bounds the discarded tail by ~ endpoint/(pi/2)
    tail = (abs(vals[0]) + abs(vals[-1])) / (math.pi / 2)
    if tail > tail_tol:
        raise ConvergenceError(f"contour tail estimate {tail:.2e} > {tail_tol:.2e}")
    integral = np.trapezoid(vals, dx=quadrature_step) / (2 * math.pi)
    return float(integral.real)


# -- Kronecker character tables ------------------------------------------------

_spf_cache: np.ndarray = np.zeros(2, dtype=np.int32)


def _spf_upto(n: int) -> np.ndarray:
    global _spf_cache
    if _spf_cache.size <= n:
        size = max(n + 1, 2 * _spf_cache.size, 1 << 12)
        spf = np.zeros(size, dtype=np.int32)
        for p in range(2, math.isqrt(size - 1) + 1):
            if spf[p] == 0:
                seg = spf[p * p :: p]
                seg[seg == 0] = p
        idx = np.nonzero(spf == 0)[0]
        spf[idx] = idx
        _spf_cache = spf
    return _spf_cache


def chi_array(d: int, N: int) -> np.ndarray:
    """chi_d(n) for 0 <= n <= N as int8, filled multiplicatively."""
    spf = _spf_upto(N)
    chi = np.zeros(N + 1, dtype=np.int8)
    if N >= 1:
        chi[1] = 1
    for n in range(2, N + 1):
        p = int(spf[n])
        m = n // p
        chi[n] = kronecker(d, p) if m == 1 else chi[p] * chi[m]
    return chi


def _truncation_length(d: int, k: int, tol: float) -> int:
    return math.ceil(abs(d) * max(8.0, (k + math.log(1.0 / tol)) / (2 * math.pi)))


def _tail_bound(N0: int, d: int, k: int) -> float:
    """2 sum_{n>N0} |lambda chi| n^{-1/2} W(n/|d|) <= 2 sqrt(3) W(N0/|d|)
    sum_{j>=1} e^{-pi j/|d|}; valid since N0/|d| >= 8 > (k-1)/pi for k <= 26."""
    ad = abs(d)
    w_edge = w_kernel(N0 / ad, k)
    geom = math.exp(-math.pi / ad) / (1.0 - math.exp(-math.pi / ad))
    return 2.0 * math.sqrt(3.0) * w_edge * geom


def central_lvalue(d: int, t: HeckeTable, tol: float = 1e-8) -> LValueResult:
    """L(1/2) for the lift twisted by chi_d; exact zero when the functional
    equation sign (-1)^k sgn(d) is -1."""
    if not is_fundamental_discriminant(d):
        raise ValueError(f"{d} is not a fundamental discriminant")
    sign = 1 if d > 0 else -1
    root = sign if t.k % 2 == 0 else -sign
    if root == -1:
        return LValueResult(d=d, value=0.0, truncation_bound=0.0, terms_used=0, root_number=-1)
    N0 = _truncation_length(d, t.k, tol)
    if N0 > t.N:
        raise InsufficientTableError(
            f"need eigenvalues to {N0} for d={d}, table holds {t.N}"
        )
    chi = chi_array(d, N0).astype(np.float64)
    n = np.arange(N0 + 1, dtype=np.float64)
    n[0] = 1.0
    w = _w_kernel_vec(n / abs(d), t.k)
    terms = t.lam[: N0 + 1] * chi * w / np.sqrt(n)
    value = 2.0 * float(np.add.reduce(terms[1:]))
    bound = _tail_bound(N0, d, t.k)
    if bound >= tol:
        raise ConvergenceError(
            f"tail bound {bound:.2e} does not meet tolerance {tol:.2e} at d={d}"
        )
    return LValueResult(
        d=d, value=value, truncation_bound=bound, terms_used=N0, root_number=1
    )


def a_factor(d: int, t: HeckeTable) -> float:
    """prod_{p | d, p > 3} (1 + (lambda(p)^2 - 2)/p), using
    lambda(p^2) = lambda(p)^2 - 1."""
    out = 1.0
    for p, _ in factorize_small(abs(d)).prime_powers:
        if p > 3:
            lam_p = float(t.lam[p])
            out *= 1.0 + (lam_p * lam_p - 2.0) / p
    return out


def waldspurger_ratio(
    d: int, coeffs: CoeffTable, t: HeckeTable, tol: float = 1e-8
) -> float | None:
    """alpha(d)^2 / (d^{k-1/2} L(1/2)) for d in the positive index set.

    None when the coefficient and the central value vanish together;
    InconsistencyError when exactly one of them is small.
    """
    if d > coeffs.N:
        raise ValueError(f"d={d} exceeds coefficient table range {coeffs.N}")
    res = central_lvalue(d, t, tol)
    ad = coeffs.a(d)
    small_l = abs(res.value) < 10 * tol
    if ad == 0 and small_l:
        return None
    if ad == 0 or small_l:
        raise InconsistencyError(
            f"d={d}: alpha={ad} but L={res.value:.3e} (tol {tol:.1e})"
        )
    return ad * ad / (d ** (t.k - 0.5) * res.value)


def bump_window(lo: float = 0.5, hi: float = 1.0):
    """Smooth compactly-supported weight exp(-1/((t-lo)(hi-t))) on (lo, hi)."""
    if not lo < hi:
        raise ValueError("window needs lo < hi")

    def phi(t: float) -> float:
        if t <= lo or t >= hi:
            return 0.0
        return math.exp(-1.0 / ((t - lo) * (hi - t)))

    return phi


@lru_cache(maxsize=8)
def _window_lvalues(x: int, lo: float, hi: float, tol: float, table_key: int):
    t = _TABLE_REGISTRY[table_key]
    ms = [m for m in range(1, x // 8 + 1) if lo < 8 * m / x < hi and _odd_squarefree(m)]
    out = []
    phi = bump_window(lo, hi)
    for m in ms:
        d = 8 * m
        out.append((m, central_lvalue(d, t, tol).value, phi(8 * m / x)))
    return out


_TABLE_REGISTRY: dict = {}


def _register(t: HeckeTable) -> int:
    key = id(t)
    _TABLE_REGISTRY[key] = t
    return key


def _odd_squarefree(m: int) -> bool:
    if m % 2 == 0:
        return False
    return all(e == 1 for _, e in factorize_small(m).prime_powers)


def first_moment_scan(
    x: int,
    u: int,
    t: HeckeTable,
    window: tuple = (0.5, 1.0),
    tol: float = 1e-8,
) -> float:
    """Self-normalized twisted average of central values:

        S(u; x) sqrt(u1) / S(1; x),

    where S(u; x) = sum over odd square-free m of L(1/2, chi_{8m})
    chi_{8m}(u) phi(8m/x) and u = u1 u2^2 with u1 square-free. The unknown
    global constant cancels in the ratio; to leading order the statistic
    tracks a multiplicative function that is lambda(p)+O(1/p) at odd prime
    powers p^{2j+1} and 1+O(1/p) at even ones.
    """
    if u < 1 or u % 2 == 0:
        raise ValueError("twist u must be odd and positive")
    lo, hi = window
    rows = _window_lvalues(x, lo, hi, tol, _register(t))
    if not rows:
        raise ValueError(f"window ({lo},{hi}) times x={x} contains no index 8m")
    s_u = 0.0
    s_1 = 0.0
    for m, lval, w in rows:
        s_1 += lval * w
        s_u += lval * w * kronecker(8 * m, u)
    if s_1 == 0.0:
        raise InconsistencyError("normalizing sum vanished")
    u1 = 1
    for p, e in factorize_small(u).prime_powers:
        if e % 2 == 1:
            u1 *= p
    return s_u * math.sqrt(u1) / s_1
