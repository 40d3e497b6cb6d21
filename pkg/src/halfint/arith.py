"""Number-theoretic kernel: sieves, factorization, Kronecker symbol,
fundamental discriminants, and the index set of discriminants 8m with m odd
and square-free.

All tables are built once and then treated as immutable; every query here is
pure, so concurrent readers are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt

import numpy as np

from .errors import CapacityError

# Rough per-entry cost of a full table set (mu, omega, liouville, sigma3,
# phi, spf, squarefree), used for the capacity guard.
_BYTES_PER_ENTRY = 32
DEFAULT_MEMORY_BUDGET = 4 << 30

# sigma3(n) <= zeta(3) n^3 stays below 2^64-1 for n <= 2_400_000; beyond that
# the table switches to Python integers.
_SIGMA3_UINT64_LIMIT = 2_400_000


@dataclass
class SieveTables:
    """Dense arithmetic tables on 0..limit (index 0 unused, index 1 per the
    usual empty-product conventions)."""

    limit: int
    mu: np.ndarray
    big_omega: np.ndarray
    liouville: np.ndarray
    sigma3: np.ndarray
    phi: np.ndarray
    smallest_prime_factor: np.ndarray
    squarefree: np.ndarray
    _primes: np.ndarray = field(default=None, repr=False)

    @property
    def primes(self) -> np.ndarray:
        if self._primes is None:
            idx = np.arange(self.limit + 1)
            self._primes = idx[(idx >= 2) & (self.smallest_prime_factor == idx)]
        return self._primes

    def primes_between(self, lo: float, hi: float) -> np.ndarray:
        """Primes p with lo < p <= hi."""
        p = self.primes
        return p[(p > lo) & (p <= hi)]

    def is_prime(self, n: int) -> bool:
        return n >= 2 and self.smallest_prime_factor[n] == n


@dataclass(frozen=True)
class Factorization:
    value: int
    prime_powers: tuple[tuple[int, int], ...]

    def divisors(self) -> list[int]:
        divs = [1]
        for p, e in self.prime_powers:
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)


def build_sieves(limit: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> SieveTables:
    """Fill all tables up to `limit` (inclusive). Deterministic."""
    if limit < 2:
        raise ValueError("limit must be >= 2")
    if limit * _BYTES_PER_ENTRY > memory_budget:
        raise CapacityError(
            f"limit {limit} needs ~{limit * _BYTES_PER_ENTRY} bytes, over budget {memory_budget}"
        )

    n = limit + 1
    spf = np.zeros(n, dtype=np.int64)
    for p in range(2, isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    untouched = spf == 0
    untouched[:2] = False
    spf[untouched] = np.nonzero(untouched)[0]

    idx = np.arange(n)
    primes = idx[(idx >= 2) & (spf == idx)]

    mu = np.ones(n, dtype=np.int8)
    big_omega = np.zeros(n, dtype=np.int16)
    for p in primes:
        p = int(p)
        mu[p::p] *= -1
        q = p * p
        if q <= limit:
            mu[q::q] = 0
        q = p
        while q <= limit:
            big_omega[q::q] += 1
            q *= p
    mu[0] = 0
    big_omega[0] = 0
    squarefree = mu != 0
    squarefree[0] = False
    liouville = np.where(big_omega % 2 == 0, 1, -1).astype(np.int8)
    liouville[0] = 0

    phi = np.arange(n, dtype=np.int64)
    for p in primes:
        p = int(p)
        phi[p::p] -= phi[p::p] // p

    if limit <= _SIGMA3_UINT64_LIMIT:
        sigma3 = np.zeros(n, dtype=np.uint64)
        for d in range(1, limit + 1):
            sigma3[d::d] += np.uint64(d * d * d)
    else:
        # Python integers beyond the uint64-safe range; multiplicative fill.
        sigma3 = np.zeros(n, dtype=object)
        sigma3[1] = 1
        for nn in range(2, limit + 1):
            p = int(spf[nn])
            m = nn
            pe = 1
            while m % p == 0:
                m //= p
                pe *= p
            sigma3[nn] = sigma3[m] * ((pe * p) ** 3 - 1) // (p**3 - 1)

    return SieveTables(
        limit=limit,
        mu=mu,
        big_omega=big_omega,
        liouville=liouville,
        sigma3=sigma3,
        phi=phi,
        smallest_prime_factor=spf,
        squarefree=squarefree,
    )


def _jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a|n) for odd n > 0."""
    a %= n
    t = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                t = -t
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            t = -t
        a %= n
    return t if n == 1 else 0


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d|n), fully multiplicative in n.

    Coincides with the Jacobi symbol for odd positive n; (d|2) is 0 for even
    d, +1 for d = ±1 mod 8 and -1 for d = ±3 mod 8; (d|0) is 1 iff d = ±1;
    (d|-1) is the sign of d (with (0|-1) = 1 by convention).
    """
    if d == 0 and n == 0:
        raise ValueError("kronecker(0, 0) is undefined")
    if n == 0:
        return 1 if d in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if d < 0:
            result = -1
    if n % 2 == 0:
        if d % 2 == 0:
            return 0
        two_sym = 1 if d % 8 in (1, 7) else -1
        while n % 2 == 0:
            n //= 2
            result *= two_sym
    return result * _jacobi(d % n, n)


def _is_squarefree(n: int) -> bool:
    if n % 4 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 2
    return True


def is_fundamental_discriminant(d: int) -> bool:
    """True iff d = 1 mod 4 square-free, or d = 4m with m = 2,3 mod 4 square-free."""
    if d == 0:
        raise ValueError("0 is not a discriminant")
    if d % 4 == 1:
        return _is_squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _is_squarefree(abs(m))
    return False


def odd_squarefree_flags(limit: int) -> np.ndarray:
    """Boolean array f with f[m] = True iff m <= limit is odd and square-free."""
    f = np.ones(limit + 1, dtype=bool)
    f[0] = False
    f[2::2] = False
    for p in range(3, isqrt(limit) + 1, 2):
        q = p * p
        if f[p]:  # p prime is enough; composite p has smaller prime whose square divides q
            f[q::q] = False
    return f


def enumerate_nflat(X: int) -> list[int]:
    """All discriminants 8m <= X with m > 0 odd and square-free, ascending."""
    if X < 8:
        return []
    mmax = X // 8
    flags = odd_squarefree_flags(mmax)
    return [8 * int(m) for m in np.nonzero(flags)[0]]


def iter_nflat(X: int, segment: int = 1 << 22):
    """Stream the same index set without holding flags for all of X/8 at
    once: square-free marking is re-run per segment against primes up to
    sqrt(X/8). Lets scans reach limits where a dense table would not fit."""
    mmax = X // 8
    if mmax < 1:
        return
    base_primes = primes_up_to(isqrt(mmax))
    lo = 1
    while lo <= mmax:
        hi = min(lo + segment - 1, mmax)
        flags = np.ones(hi - lo + 1, dtype=bool)
        flags[(lo % 2)::2] = False  # even m out
        for p in base_primes:
            if p == 2:
                continue
            q = p * p
            start = ((lo + q - 1) // q) * q
            if start <= hi:
                flags[start - lo :: q] = False
        for off in np.nonzero(flags)[0]:
            yield 8 * (lo + int(off))
        lo = hi + 1


def factorize(n: int, tables: SieveTables) -> Factorization:
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    if n > tables.limit:
        raise ValueError(f"{n} exceeds sieve limit {tables.limit}")
    pps = []
    m = n
    while m > 1:
        p = int(tables.smallest_prime_factor[m])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        pps.append((p, e))
    return Factorization(value=n, prime_powers=tuple(pps))


def factorize_small(n: int) -> Factorization:
    """Trial-division factorization; no table needed. Fine for n up to ~1e12."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    pps = []
    m = n
    for p in range(2, isqrt(n) + 1):
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            pps.append((p, e))
    if m > 1:
        pps.append((m, 1))
    return Factorization(value=n, prime_powers=tuple(pps))


def primes_up_to(n: int) -> list[int]:
    """Plain sieve of Eratosthenes, for callers that do not need full tables."""
    if n < 2:
        return []
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return [int(p) for p in np.nonzero(flags)[0]]
