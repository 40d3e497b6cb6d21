"""Hecke eigenvalues of the integral-weight lift and the exact coefficient
identity connecting them to the half-integral form, plus the unconditional
sign-flip construction.

For the weight-13/2 form the lift is the weight-12 discriminant form, so the
eigenvalues are tau(n) and the normalized ones are lambda(n) = tau(n)/n^{11/2}.
The identity alpha(n^2 d) = alpha(d) * sum_{r|n} mu(r) chi_d(r) r^{k-1}
tau(n/r) is checked over exact integers: it is the coefficient relation of
the lift multiplied through by (n^2 d)^{(k-1/2)/2}, so no tolerance is
involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arith import factorize_small, kronecker
from .qseries import CoeffTable, delta_integral

__all__ = [
    "HeckeTable",
    "build_hecke_table",
    "lambda_f",
    "shimura_identity_check",
    "find_signflip_prime",
    "signflip_verify",
]


@dataclass
class HeckeTable:
    """Exact tau(n) and floating lambda(n) = tau(n)/n^{(2k-1)/2}, n <= N."""

    k: int
    tau: list
    N: int
    _lambda: np.ndarray = field(default=None, repr=False)

    @property
    def lam(self) -> np.ndarray:
        if self._lambda is None:
            n = np.arange(self.N + 1, dtype=np.float64)
            n[0] = 1.0
            self._lambda = np.fromiter(
                (float(t) for t in self.tau), dtype=np.float64, count=self.N + 1
            ) / n ** (self.k - 0.5)
            self._lambda[0] = 0.0
        return self._lambda


def build_hecke_table(N: int, k: int = 6) -> HeckeTable:
    """Eigenvalue table for the weight-2k lift; only k=6 (the discriminant
    form) is implemented. The Deligne bound |tau(p)| <= 2 p^{11/2} is a hard
    assertion, checked exactly as tau(p)^2 <= 4 p^11."""
    if k != 6:
        raise ValueError("only the weight-12 lift (k=6) is implemented")
    tau = delta_integral(N)
    for p in _primes_upto(N):
        if tau[p] * tau[p] > 4 * p**11:
            raise AssertionError(f"eigenvalue bound violated at p={p}")
    return HeckeTable(k=k, tau=tau, N=N)


def _primes_upto(n: int) -> list:
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    p = 2
    while p * p <= n:
        if flags[p]:
            flags[p * p :: p] = False
        p += 1
    return [int(q) for q in np.nonzero(flags)[0]]


def lambda_f(n: int, t: HeckeTable) -> float:
    """tau(n) / n^{(2k-1)/2}."""
    if not 1 <= n <= t.N:
        raise ValueError(f"n={n} outside table range 1..{t.N}")
    return float(t.lam[n])


def shimura_identity_check(d: int, n: int, coeffs: CoeffTable, t: HeckeTable) -> bool:
    """Exact integer identity relating alpha at n^2 d to alpha at d.

    Requires d > 0 (the branch with positive twists for even k) and
    n^2 d within the coefficient table.
    """
    if d <= 0:
        raise ValueError("d must be a positive fundamental discriminant here")
    if n * n * d > coeffs.N:
        raise ValueError(f"n^2 d = {n * n * d} exceeds table range {coeffs.N}")
    if n > t.N:
        raise ValueError(f"n = {n} exceeds eigenvalue table range {t.N}")
    k = (coeffs.weight_times_two - 1) // 2
    rhs = 0
    for r in factorize_small(n).divisors():
        mu_r = _mu(r)
        if mu_r == 0:
            continue
        rhs += mu_r * kronecker(d, r) * r ** (k - 1) * t.tau[n // r]
    return coeffs.a(n * n * d) == coeffs.a(d) * rhs


def _mu(r: int) -> int:
    f = factorize_small(r)
    if any(e > 1 for _, e in f.prime_powers):
        return 0
    return (-1) ** len(f.prime_powers)


def find_signflip_prime(t: HeckeTable, bound: int) -> int | None:
    """Smallest prime p <= bound with lambda(p) < -2/sqrt(p), i.e. with
    tau(p) < -2 p^{k-1} exactly; None if no witness below the bound."""
    if bound > t.N:
        raise ValueError(f"bound {bound} exceeds table range {t.N}")
    for p in _primes_upto(bound):
        if t.tau[p] < -2 * p ** (t.k - 1):
            return p
    return None


def signflip_verify(d: int, p: int, coeffs: CoeffTable) -> bool:
    """True iff alpha(d p^2) and alpha(d) have strictly opposite signs.

    Precondition: alpha(d) != 0 (raises otherwise) and d p^2 in range. With p
    from find_signflip_prime this holds for every d in the index set, because
    alpha(d p^2) = alpha(d) (tau(p) - chi_d(p) p^{k-1}) and
    tau(p) < -2 p^{k-1} forces the second factor negative.
    """
    if d * p * p > coeffs.N:
        raise ValueError(f"d p^2 = {d * p * p} exceeds table range {coeffs.N}")
    ad = coeffs.a(d)
    if ad == 0:
        raise ValueError(f"alpha({d}) = 0: sign flip undefined")
    adp = coeffs.a(d * p * p)
    return (ad > 0) == (adp < 0) and adp != 0
