"""Complete exponential sums and the circle-method objects: twisted quadratic
Gauss sums with their prime-power closed form, Kloosterman sums with the Weil
bound predicate, the L^2 defect of the Farey-arc approximation to the unit
interval, a Poisson-summation identity check over odd moduli, the shifted
convolution of the half-integral form's coefficients, and the numerical
modularity self-test that exercises the whole coefficient pipeline.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

import numpy as np

from .arith import factorize_small, kronecker, primes_up_to
from .errors import BudgetExceededError, ConvergenceError, InsufficientTableError
from .qseries import CoeffTable

__all__ = [
    "gauss_sum_bruteforce",
    "gauss_sum_closed",
    "kloosterman",
    "kloosterman_weil_ok",
    "JutilaSystem",
    "build_jutila_system",
    "jutila_l2_defect",
    "poisson_check",
    "shifted_convolution",
    "AutomorphyFactor",
    "automorphy_factor",
    "modularity_check",
]


# -- Gauss sums ----------------------------------------------------------------


def gauss_sum_bruteforce(l: int, n: int) -> complex:
    """((1-i)/2 + (-1|n)(1+i)/2) sum_{a mod n} (a|n) e(a l / n), evaluated
    directly. O(n); odd n only."""
    if n < 1 or n % 2 == 0:
        raise ValueError("modulus must be odd and positive")
    pref = (1 - 1j) / 2 + kronecker(-1, n) * (1 + 1j) / 2
    a = np.arange(n)
    sym = np.fromiter((kronecker(int(x), n) for x in a), dtype=np.float64, count=n)
    phase = np.exp(2j * np.pi * ((a * (l % n)) % n) / n)
    return complex(pref * np.dot(sym, phase))


def _gauss_prime_power(l: int, p: int, beta: int) -> float:
    """Closed form at p^beta with alpha = v_p(l), l != 0. Real-valued."""
    alpha = 0
    ll = abs(l)
    while ll % p == 0:
        ll //= p
        alpha += 1
    if beta <= alpha:
        if beta % 2 == 1:
            return 0.0
        return float(p ** (beta - 1) * (p - 1))  # phi(p^beta)
    if beta == alpha + 1:
        if beta % 2 == 0:
            return float(-(p**alpha))
        return kronecker(l // p**alpha, p) * p**alpha * math.sqrt(p)
    return 0.0


def gauss_sum_closed(l: int, n: int) -> float:
    """Multiplicative evaluation over the prime powers of odd n.

    For l = 0 the sum degenerates to phi(n) on squares and 0 otherwise.
    All values are real.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError("modulus must be odd and positive")
    if l == 0:
        root = isqrt(n)
        if root * root != n:
            return 0.0
        out = 1.0
        for p, e in factorize_small(n).prime_powers:
            out *= p ** (e - 1) * (p - 1)
        return out
    out = 1.0
    for p, e in factorize_small(n).prime_powers:
        out *= _gauss_prime_power(l, p, e)
        if out == 0.0:
            return 0.0
    return out


# -- Kloosterman sums -----------------------------------------------------------


def kloosterman(a: int, b: int, c: int) -> float:
    """S(a, b; c) = sum_{x mod c, (x,c)=1} e((a x + b x*)/c), real by the
    x -> -x symmetry. Direct evaluation, O(c log c)."""
    if c < 1:
        raise ValueError("modulus must be positive")
    if c > 10**6:
        raise BudgetExceededError("modulus too large for direct evaluation")
    acc = 0.0
    tau = 2.0 * math.pi / c
    for x in range(c):
        if gcd(x, c) != 1:
            continue
        xinv = pow(x, -1, c)
        acc += math.cos(tau * ((a * x + b * xinv) % c))
    return acc


def kloosterman_weil_ok(a: int, b: int, c: int) -> bool:
    """|S(a,b;c)| <= d(c) gcd(a,b,c)^{1/2} c^{1/2}."""
    s = kloosterman(a, b, c)
    ndiv = len(factorize_small(c).divisors())
    g = gcd(gcd(abs(a), abs(b)), c)
    return abs(s) <= ndiv * math.sqrt(g) * math.sqrt(c) + 1e-9


# -- Jutila's circle-method measure ---------------------------------------------


@dataclass(frozen=True)
class JutilaSystem:
    Q: float
    eta: float
    Delta: int
    Qset: tuple
    L: int


def build_jutila_system(Q: float, eta: float, Delta: int) -> JutilaSystem:
    """Moduli q = 4 Delta r in [Q, 2Q] with r = 1 mod 4 prime, and the exact
    count L = sum phi(q)."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if Delta < 1 or Delta > Q ** (eta / 2) + 1e-9:
        raise ValueError("Delta must satisfy 1 <= Delta <= Q^{eta/2}")
    qlist = []
    L = 0
    r_lo = math.ceil(Q / (4 * Delta))
    r_hi = math.floor(2 * Q / (4 * Delta))
    for r in primes_up_to(max(r_hi, 2)):
        if r < r_lo or r % 4 != 1:
            continue
        q = 4 * Delta * r
        if not Q <= q <= 2 * Q:
            continue
        phi_q = 1
        for p, e in factorize_small(q).prime_powers:
            phi_q *= p ** (e - 1) * (p - 1)
        qlist.append(q)
        L += phi_q
    return JutilaSystem(Q=Q, eta=eta, Delta=Delta, Qset=tuple(qlist), L=L)


def jutila_l2_defect(
    Q: float,
    eta: float,
    Delta: int,
    exact: bool = False,
    endpoint_budget: int = 50_000_000,
) -> float:
    """integral over R of (I - Itilde)^2, where I is the indicator of [0,1]
    and Itilde is the normalized union of Farey arcs [d/q +- Q^{eta-2}] over
    q in the modulus set.

    The integrand is piecewise constant, so the integral is a finite sweep
    over arc endpoints; float mode sums segments in a fixed order, exact mode
    re-runs the same sweep in rational arithmetic on the identical binary
    endpoints (both modes integrate the same function, so they certify each
    other).
    """
    sys_ = build_jutila_system(Q, eta, Delta)
    if sys_.L == 0:
        return 1.0
    if 2 * sys_.L > endpoint_budget:
        raise BudgetExceededError(f"{2 * sys_.L} arc endpoints exceed budget")
    delta = float(Q) ** (eta - 2.0)
    weight = float(Q) ** (2.0 - eta) / (2.0 * sys_.L)
    starts = []
    ends = []
    for q in sys_.Qset:
        for d in range(1, q + 1):
            if gcd(d, q) == 1:
                center = d / q
                starts.append(center - delta)
                ends.append(center + delta)
    if exact:
        dfrac = Fraction(delta)
        wfrac = Fraction(weight)
        events = []
        for q in sys_.Qset:
            for d in range(1, q + 1):
                if gcd(d, q) == 1:
                    c = Fraction(d, q)
                    events.append((c - dfrac, 1))
                    events.append((c + dfrac, -1))
        events.append((Fraction(0), 0))
        events.append((Fraction(1), 0))
        events.sort()
        total = Fraction(0)
        cov = 0
        for i in range(len(events) - 1):
            cov += events[i][1]
            seglen = events[i + 1][0] - events[i][0]
            if seglen == 0:
                continue
            inside = 1 if (events[i][0] >= 0 and events[i + 1][0] <= 1) else 0
            val = inside - wfrac * cov
            total += val * val * seglen
        return float(total)
    pos = np.concatenate([starts, ends, [0.0, 1.0]])
    step = np.concatenate(
        [np.ones(len(starts)), -np.ones(len(ends)), [0.0, 0.0]]
    )
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    step = step[order]
    cov = np.cumsum(step)[:-1]
    seglen = np.diff(pos)
    inside = (pos[:-1] >= 0.0) & (pos[1:] <= 1.0)
    val = inside.astype(np.float64) - weight * cov
    return float(np.add.reduce(val * val * seglen))


# -- Poisson summation over odd moduli -------------------------------------------


def poisson_check(n: int, gaussian_width: float) -> float:
    """Absolute discrepancy between

        sum_{d odd} (d|n) F(d)

    and

        (1/2n) (2|n) sum_l (-1)^l G_l(n) Ftilde(l/2n),

    for the Gaussian F(x) = exp(-pi (x/s)^2), whose cosine-plus-sine
    transform is Ftilde(y) = s exp(-pi s^2 y^2) in closed form.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError("modulus must be odd and positive")
    s = float(gaussian_width)
    if s <= 0:
        raise ValueError("width must be positive")
    dmax = math.ceil(4.0 * s) + 1
    lhs = 0.0
    for d in range(-dmax, dmax + 1):
        if d % 2 == 0:
            continue
        lhs += kronecker(d, n) * math.exp(-math.pi * (d / s) ** 2)
    lmax = math.ceil(2 * n * 4.5 / s) + 1
    rhs = 0.0
    for l in range(-lmax, lmax + 1):
        g = gauss_sum_closed(l, n)
        if g == 0.0:
            continue
        lam = l / (2.0 * n)
        rhs += (-1) ** l * g * s * math.exp(-math.pi * (s * lam) ** 2)
    rhs *= kronecker(2, n) / (2.0 * n)
    return abs(lhs - rhs)


# -- shifted convolution ----------------------------------------------------------


def shifted_convolution(
    h: int, v: int, Delta: int, X: float, coeffs: CoeffTable
) -> complex:
    """X^{-(k-1/2)} sum_n alpha(n) alpha(n+h) e(n v / Delta)
    e^{-2 pi (2n+h)/X}, truncated at n0 = X log(1e12)/(4 pi), beyond which
    the smoothing kills every term against the polynomial coefficient growth
    (tail below 1e-12 relative to the X^{k-1/2} normalization).
    """
    if h == 0:
        raise ValueError("shift must be nonzero")
    if Delta < 1 or gcd(v, Delta) != 1:
        raise ValueError("need Delta >= 1 and gcd(v, Delta) = 1")
    n0 = math.ceil(X * math.log(1e12) / (4 * math.pi))
    if coeffs.N < n0 + abs(h):
        raise InsufficientTableError(
            f"need coefficients to {n0 + abs(h)}, table holds {coeffs.N}"
        )
    k = (coeffs.weight_times_two - 1) // 2
    af = coeffs.float_array()
    lo = max(1, 1 - h)
    n = np.arange(lo, n0 + 1)
    a1 = af[n]
    a2 = af[n + h]
    damp = np.exp(-2.0 * math.pi * (2 * n + h) / X)
    phase = np.exp(2j * np.pi * (v * (n % Delta)) / Delta)
    total = np.add.reduce(a1 * a2 * damp * phase)
    return complex(total / X ** (k - 0.5))


# -- modularity self-test ----------------------------------------------------------


@dataclass(frozen=True)
class AutomorphyFactor:
    gamma: tuple
    epsilon_d: complex
    nu: complex
    j_power: complex


def _normalize_gamma(gamma: tuple) -> tuple:
    a, b, c, d = (int(x) for x in gamma)
    if a * d - b * c != 1:
        raise ValueError("matrix must have determinant 1")
    if c % 4 != 0:
        raise ValueError("lower-left entry must be divisible by 4")
    if d < 0 or (d == 0 and c < 0):
        a, b, c, d = -a, -b, -c, -d
    if d % 2 == 0:
        raise ValueError("lower-right entry must be odd")
    return a, b, c, d


def automorphy_factor(gamma: tuple, z: complex, weight_times_two: int = 13) -> AutomorphyFactor:
    """Theta-multiplier automorphy data at gamma: nu = (c|d) conj(eps_d) with
    eps_d = 1 for d = 1 mod 4 and i^{2k+1} for d = 3 mod 4, and
    j^(k+1/2) = (cz+d)^k sqrt(cz+d) on the principal branch. The matrix is
    replaced by its negative if needed so d > 0 (same Moebius action)."""
    a, b, c, d = _normalize_gamma(gamma)
    k = (weight_times_two - 1) // 2
    eps = 1.0 + 0.0j if d % 4 == 1 else 1j ** (weight_times_two % 4)
    nu = kronecker(c, d) * eps.conjugate()
    j = c * z + d
    jpow = j**k * cmath.sqrt(j)
    return AutomorphyFactor(gamma=(a, b, c, d), epsilon_d=eps, nu=nu, j_power=jpow)


def _series_eval(coeffs: CoeffTable, z: complex) -> complex:
    y = z.imag
    if y < 0.05:
        raise ConvergenceError(f"Im z = {y:.4f} below the 0.05 guard")
    ncut = math.ceil(20.0 / y)
    if ncut > coeffs.N:
        raise ConvergenceError(
            f"series needs {ncut} coefficients at Im z = {y:.4f}, table holds {coeffs.N}"
        )
    n = np.arange(1, ncut + 1)
    af = coeffs.float_array()[1 : ncut + 1]
    return complex(np.add.reduce(af * np.exp(2j * np.pi * n * z)))


def modularity_check(gamma: tuple, z: complex, coeffs: CoeffTable) -> float:
    """Relative discrepancy |g(gamma z) - nu j^{k+1/2} g(z)| / |g(gamma z)|,
    with g evaluated by the truncated Fourier series. Exercises the entire
    coefficient pipeline: a single wrong alpha(n) in the first few hundred
    terms shows up here."""
    fac = automorphy_factor(gamma, z, coeffs.weight_times_two)
    a, b, c, d = fac.gamma
    gz = (a * z + b) / (c * z + d)
    lhs = _series_eval(coeffs, gz)
    rhs = fac.nu * fac.j_power * _series_eval(coeffs, z)
    return abs(lhs - rhs) / abs(lhs)
