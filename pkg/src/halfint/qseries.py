"""Exact power-series engine and the coefficient tables it produces.

Two kinds of object live here:

* `PowerSeries`: dense exact-rational q-expansions with a truncation order,
  used for the defining constructions (theta, the weight-4 Eisenstein series,
  and the reference build of the weight-13/2 form). Slow but transparent.

* `CoeffTable`: the integer coefficients alpha(n) = c(n) n^{(k-1/2)/2} of a
  half-integral weight Hecke form, built by a fast exact convolution and
  cached to disk. The production table is the weight-13/2 form whose lift is
  the discriminant form; its alpha(n) vanish for n = 2,3 mod 4.

All integer arithmetic is exact. The fast builder splits sigma_3 into
base-2^20 digits so every numpy accumulation stays well inside int64; the
digits are recombined into Python integers at the end.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, isqrt

import numpy as np

from .errors import CapacityError, ChecksumError, FormatError

__all__ = [
    "PowerSeries",
    "CoeffTable",
    "ps_mul",
    "ps_derivative_over_2pii",
    "ps_dilate",
    "u_operator",
    "theta_series",
    "eisenstein_g",
    "delta_halfintegral",
    "delta_halfintegral_reference",
    "delta_integral",
    "poly_mul_exact",
    "save_coeffs",
    "load_coeffs",
]


# ----------------------------------------------------------------------------
# exact power series


@dataclass
class PowerSeries:
    """q-expansion sum a_n q^n for 0 <= n <= truncation, exact rationals."""

    coeffs: list
    label: str = ""

    def __post_init__(self):
        self.coeffs = [Fraction(c) for c in self.coeffs]

    @property
    def truncation(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n]

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        n = min(self.truncation, other.truncation)
        return PowerSeries([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)])

    def __sub__(self, other: "PowerSeries") -> "PowerSeries":
        n = min(self.truncation, other.truncation)
        return PowerSeries([self.coeffs[i] - other.coeffs[i] for i in range(n + 1)])

    def scale(self, c) -> "PowerSeries":
        c = Fraction(c)
        return PowerSeries([c * a for a in self.coeffs], label=self.label)

    def __eq__(self, other) -> bool:
        return isinstance(other, PowerSeries) and self.coeffs == other.coeffs


def ps_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Cauchy product, truncated to the shorter operand. Exact.

    Zero coefficients are skipped, so products with sparse operands (theta,
    dilated series) cost #nonzero(a) * #nonzero(b) instead of N^2.
    """
    n = min(a.truncation, b.truncation)
    out = [Fraction(0)] * (n + 1)
    bnz = [(j, bj) for j, bj in enumerate(b.coeffs[: n + 1]) if bj]
    for i, ai in enumerate(a.coeffs[: n + 1]):
        if not ai:
            continue
        for j, bj in bnz:
            if i + j > n:
                break
            out[i + j] += ai * bj
    return PowerSeries(out)


def ps_derivative_over_2pii(a: PowerSeries) -> PowerSeries:
    """q d/dq, i.e. the z-derivative divided by 2*pi*i: a_n -> n a_n."""
    return PowerSeries([n * c for n, c in enumerate(a.coeffs)])


def ps_dilate(a: PowerSeries, m: int) -> PowerSeries:
    """Argument scaling z -> m z, i.e. q -> q^m. Truncation preserved."""
    if m < 1:
        raise ValueError("dilation factor must be >= 1")
    n = a.truncation
    out = [Fraction(0)] * (n + 1)
    for i, c in enumerate(a.coeffs):
        if i * m > n:
            break
        out[i * m] = c
    return PowerSeries(out)


def u_operator(a: PowerSeries, m: int) -> PowerSeries:
    """Coefficient extraction a_n -> a_{mn}; truncation becomes floor(N/m)."""
    if m < 1:
        raise ValueError("operator index must be >= 1")
    return PowerSeries([a.coeffs[m * i] for i in range(a.truncation // m + 1)])


def theta_series(N: int) -> PowerSeries:
    """1 + 2 sum_{m>=1} q^{m^2}, truncated at N."""
    if N < 0:
        raise ValueError("truncation must be >= 0")
    out = [Fraction(0)] * (N + 1)
    out[0] = Fraction(1)
    for m in range(1, isqrt(N) + 1):
        out[m * m] = Fraction(2)
    return PowerSeries(out, label="theta")


def _bernoulli(k: int) -> Fraction:
    vals = [Fraction(1)]
    for m in range(1, k + 1):
        s = sum(comb(m + 1, j) * vals[j] for j in range(m))
        vals.append(-s / (m + 1))
    return vals[k]


def zeta_neg(k: int) -> Fraction:
    """zeta(1-k) = -B_k / k for integer k >= 2, exact."""
    return -_bernoulli(k) / k


def eisenstein_g(k: int, N: int) -> PowerSeries:
    """Constant term zeta(1-k)/2, then sigma_{k-1}(n) q^n."""
    if k % 2 != 0 or k < 4:
        raise ValueError(f"unsupported weight {k}: need even k >= 4")
    out = [Fraction(0)] * (N + 1)
    out[0] = zeta_neg(k) / 2
    sig = [0] * (N + 1)
    for d in range(1, N + 1):
        dk = d ** (k - 1)
        for m in range(d, N + 1, d):
            sig[m] += dk
    for n in range(1, N + 1):
        out[n] = Fraction(sig[n])
    return PowerSeries(out, label=f"G{k}")


# ----------------------------------------------------------------------------
# coefficient tables


@dataclass
class CoeffTable:
    """Integer coefficients alpha(n), 1 <= n <= N, of a weight (wt2/2) form.

    alpha list is indexed 0..N with alpha[0] = 0. The normalized coefficients
    are c(n) = alpha(n) / n^{(wt2-2)/4}.
    """

    weight_times_two: int
    alpha: list
    N: int
    _sign: np.ndarray = field(default=None, repr=False)
    _float: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.weight_times_two % 2 == 0 or self.weight_times_two < 5:
            raise ValueError("weight_times_two must be an odd integer >= 5")
        if len(self.alpha) != self.N + 1:
            raise ValueError("alpha must have N+1 entries (index 0 unused)")
        for v in self.alpha[: min(len(self.alpha), 16)]:
            if not isinstance(v, int):
                raise ValueError("alpha entries must be exact integers")

    def a(self, n: int) -> int:
        if not 1 <= n <= self.N:
            raise ValueError(f"n={n} outside table range 1..{self.N}")
        return self.alpha[n]

    def sign_array(self) -> np.ndarray:
        """int8 array s with s[n] = sign(alpha(n)); compact scan view."""
        if self._sign is None:
            self._sign = np.fromiter(
                ((v > 0) - (v < 0) for v in self.alpha), dtype=np.int8, count=self.N + 1
            )
        return self._sign

    def float_array(self) -> np.ndarray:
        if self._float is None:
            self._float = np.fromiter(
                (float(v) for v in self.alpha), dtype=np.float64, count=self.N + 1
            )
        return self._float

    def c_array(self) -> np.ndarray:
        """Normalized coefficients c(n) = alpha(n) n^{-(wt2-2)/4} (c[0] = 0)."""
        expo = (self.weight_times_two - 2) / 4.0
        n = np.arange(self.N + 1, dtype=np.float64)
        n[0] = 1.0
        out = self.float_array() / n**expo
        out[0] = 0.0
        return out

    def support_violations(self) -> np.ndarray:
        """Indices n = 2,3 mod 4 with alpha(n) != 0 (must be empty for the
        plus-space form)."""
        s = self.sign_array()
        n = np.arange(self.N + 1)
        mask = ((n % 4 == 2) | (n % 4 == 3)) & (s != 0)
        return n[mask]


# -- fast exact builder -------------------------------------------------------

_DIG = 20
_MASK = (1 << _DIG) - 1
# sigma3 must stay below 2^63 as int64 during the divisor fill: fine to
# ~1.96e6, i.e. table sizes N up to ~7.8e6.
_FAST_N_CAP = 7_800_000


def _sigma3_int64(M: int) -> np.ndarray:
    sig = np.zeros(M + 1, dtype=np.int64)
    for d in range(1, M + 1):
        sig[d::d] += d * d * d
    return sig


def _digits(arr: np.ndarray, count: int) -> list:
    return [((arr >> (_DIG * k)) & _MASK).copy() for k in range(count)]


def _normalize_digits(digs: list) -> list:
    out = []
    carry = np.zeros_like(digs[0])
    for d in digs:
        v = d + carry
        out.append(v & _MASK)
        carry = v >> _DIG
    while carry.any():
        out.append(carry & _MASK)
        carry = carry >> _DIG
    return out


def _pack_object(digs: list) -> np.ndarray:
    """Combine normalized 20-bit digit arrays into exact Python ints,
    grouping three digits per int64 word before widening."""
    total = None
    for g in range(0, len(digs), 3):
        grp = digs[g].copy()
        if g + 1 < len(digs):
            grp |= digs[g + 1] << _DIG
        if g + 2 < len(digs):
            grp |= digs[g + 2] << (2 * _DIG)
        obj = grp.astype(object)
        if g:
            obj <<= 3 * _DIG * (g // 3)
            total = total + obj
        else:
            total = obj
    return total

def delta_halfintegral(N: int) -> CoeffTable:
    """Exact alpha(n), n <= N, of the weight-13/2 plus-space form whose
    Shimura lift is the discriminant form.

    The form is 60/(2 pi i) * (2 G4(4z) theta'(z) - G4'(4z) theta(z)), where
    G4' is the derivative of G4 in its own argument evaluated at 4z (no
    chain-rule factor). Writing E = 240*G4(4z), B = sum m^2 q^{m^2},
    C = sum n sigma3(n) q^{4n} and D = theta, the coefficients are

        alpha = E*B - 60*C*D,

    which is manifestly integral. Both products run over representations
    n = m^2 + 4a, accumulated exactly in base-2^20 digit arrays.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > _FAST_N_CAP:
        raise CapacityError(f"fast builder caps at N={_FAST_N_CAP}")
    M = Q = N // 4
    sig3 = _sigma3_int64(M) if M >= 1 else np.zeros(1, dtype=np.int64)

    s3d = _digits(sig3, 3)
    # digits of b * sigma3(b) (the q d/dq factor), renormalized to 20 bits
    b = np.arange(sig3.size, dtype=np.int64)
    cdd = []
    carry = np.zeros_like(b)
    for k in range(3):
        prod = s3d[k] * b + carry
        cdd.append(prod & _MASK)
        carry = prod >> _DIG
    cdd.append(carry)

    ebacc = [np.zeros((2, Q + 1), dtype=np.int64) for _ in range(3)]
    cdacc = [np.zeros((2, Q + 1), dtype=np.int64) for _ in range(4)]
    for m in range(1, isqrt(N) + 1):
        m2 = m * m
        L = (N - m2) >> 2
        if L < 1:
            continue
        row = m2 & 3  # 0 for even m, 1 for odd m
        base = m2 >> 2
        sA = 240 * m2
        for k in range(3):
            ebacc[k][row, base + 1 : base + 1 + L] += s3d[k][1 : L + 1] * sA
        for k in range(4):
            cdacc[k][row, base + 1 : base + 1 + L] += cdd[k][1 : L + 1] * 120

    alpha = [0] * (N + 1)
    for row in (0, 1):
        eb = _pack_object(_normalize_digits([d[row] for d in ebacc]))
        cd = _pack_object(_normalize_digits([d[row] for d in cdacc]))
        vals = (eb - cd).tolist()
        ncols = len(range(row, N + 1, 4))
        alpha[row::4] = vals[:ncols]
    # E's constant term times B: + m^2 at n = m^2
    for m in range(1, isqrt(N) + 1):
        alpha[m * m] += m * m
    # theta's constant term times the dilated derivative: - 60 b sigma3(b) at 4b
    sig_list = sig3.tolist()
    for bb in range(1, M + 1):
        alpha[4 * bb] -= 60 * bb * sig_list[bb]
    return CoeffTable(weight_times_two=13, alpha=alpha, N=N)


def delta_halfintegral_reference(N: int) -> CoeffTable:
    """Same coefficients via the defining rational power-series composition.

    Slow (exact rationals); used to certify the fast builder. Integrality of
    the result is asserted: every denominator introduced by the 1/240
    constant term must cancel.
    """
    g4 = eisenstein_g(4, N)
    th = theta_series(N)
    term1 = ps_mul(ps_dilate(g4, 4), ps_derivative_over_2pii(th))
    term2 = ps_mul(ps_dilate(ps_derivative_over_2pii(g4), 4), th)
    delta = (term1.scale(2) - term2).scale(60)
    alpha = [0] * (N + 1)
    for n in range(N + 1):
        c = delta.coeffs[n]
        if c.denominator != 1:
            raise ArithmeticError(f"non-integral coefficient at n={n}: {c}")
        alpha[n] = int(c)
    return CoeffTable(weight_times_two=13, alpha=alpha, N=N)


# -- tau of the discriminant form ---------------------------------------------


def poly_mul_exact(a: list, b: list, trunc: int | None = None) -> list:
    """Exact product of integer polynomials via packed-integer multiplication.

    Coefficients are packed into fixed-width cells of one big integer, the
    product is taken with CPython's big-integer arithmetic, and the cells are
    read back with an offset that keeps negative coefficients from borrowing
    across cell boundaries.
    """
    if not a or not b:
        return []
    la, lb = len(a), len(b)
    out_len = la + lb - 1
    if trunc is not None:
        out_len = min(out_len, trunc + 1)
        a = a[:out_len]
        b = b[:out_len]
        la, lb = len(a), len(b)
    maxa = max(1, max(abs(c) for c in a))
    maxb = max(1, max(abs(c) for c in b))
    bound = maxa * maxb * min(la, lb)
    cell_bits = bound.bit_length() + 2
    cell_bytes = (cell_bits + 7) // 8
    width = 8 * cell_bytes

    def pack(coeffs, off):
        buf = bytearray()
        for c in coeffs:
            buf += (c + off).to_bytes(cell_bytes, "little", signed=False)
        return int.from_bytes(buf, "little")

    # Signed packing: add a half-cell offset to one factor's *product* instead
    # of the factors, by splitting each factor into nonnegative packs.
    apos = pack([c if c > 0 else 0 for c in a], 0)
    aneg = pack([-c if c < 0 else 0 for c in a], 0)
    bpos = pack([c if c > 0 else 0 for c in b], 0)
    bneg = pack([-c if c < 0 else 0 for c in b], 0)
    half = 1 << (width - 1)
    offset_int = pack([half] * (la + lb - 1), 0)
    prod = apos * bpos + aneg * bneg - apos * bneg - aneg * bpos + offset_int
    raw = prod.to_bytes(cell_bytes * (la + lb), "little", signed=False)
    out = []
    for i in range(out_len):
        cell = int.from_bytes(raw[i * cell_bytes : (i + 1) * cell_bytes], "little")
        out.append(cell - half)
    return out


def delta_integral(N: int) -> list:
    """tau(n) for 1 <= n <= N from q prod (1-q^n)^24, exact.

    prod(1-q^n) cubed is the sparse series sum (-1)^m (2m+1) q^{m(m+1)/2};
    cubing once and squaring three times gives the 24th power.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    L = N - 1  # coefficient index after factoring out the leading q
    cube = [0] * (L + 1)
    m = 0
    while m * (m + 1) // 2 <= L:
        cube[m * (m + 1) // 2] = (-1) ** m * (2 * m + 1)
        m += 1
    p = cube
    for _ in range(3):
        p = poly_mul_exact(p, p, trunc=L)
    return [0] + p  # tau[n] = p[n-1]; index 0 unused


# ----------------------------------------------------------------------------
# disk cache

_MAGIC = b"HICF"
_VERSION = 1


def _checksum() -> "hashlib._Hash":
    return hashlib.blake2b(digest_size=8)


def save_coeffs(t: CoeffTable, path: str) -> None:
    """Write the binary cache: magic, version u32, weight u32, N u64, then N
    length-prefixed little-endian two's-complement records, then an 8-byte
    BLAKE2b checksum of everything before it. A path ending in .csv writes
    the plain-text "n,alpha" form instead."""
    if str(path).endswith(".csv"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "alpha"])
            for n in range(1, t.N + 1):
                w.writerow([n, t.alpha[n]])
        return
    h = _checksum()
    buf = io.BytesIO()

    def emit(b: bytes):
        h.update(b)
        buf.write(b)

    emit(_MAGIC)
    emit(_VERSION.to_bytes(4, "little"))
    emit(t.weight_times_two.to_bytes(4, "little"))
    emit(t.N.to_bytes(8, "little"))
    chunk = bytearray()
    for n in range(1, t.N + 1):
        v = t.alpha[n]
        nbytes = max(1, (v.bit_length() + 8) // 8)
        chunk.append(nbytes)
        chunk += v.to_bytes(nbytes, "little", signed=True)
        if len(chunk) > 1 << 20:
            emit(bytes(chunk))
            chunk.clear()
    emit(bytes(chunk))
    buf.write(h.digest())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_coeffs(path: str) -> CoeffTable:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        text = data[:4096].decode("utf-8", errors="ignore")
        if "," in text:
            return _load_csv(path)
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 28:
        raise ChecksumError(f"{path}: truncated header")
    h = _checksum()
    h.update(data[:-8])
    if h.digest() != data[-8:]:
        raise ChecksumError(f"{path}: checksum mismatch")
    version = int.from_bytes(data[4:8], "little")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    wt2 = int.from_bytes(data[8:12], "little")
    N = int.from_bytes(data[12:20], "little")
    alpha = [0] * (N + 1)
    pos = 20
    end = len(data) - 8
    for n in range(1, N + 1):
        if pos >= end:
            raise FormatError(f"{path}: record stream ends early at n={n}")
        ln = data[pos]
        pos += 1
        alpha[n] = int.from_bytes(data[pos : pos + ln], "little", signed=True)
        pos += ln
    if pos != end:
        raise FormatError(f"{path}: {end - pos} trailing bytes after records")
    return CoeffTable(weight_times_two=wt2, alpha=alpha, N=N)


def _load_csv(path: str) -> CoeffTable:
    rows = []
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "n":
                    continue
                rows.append((int(row[0]), int(row[1])))
    except (ValueError, IndexError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: not a coefficient CSV ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: no coefficient rows")
    N = max(n for n, _ in rows)
    alpha = [0] * (N + 1)
    for n, v in rows:
        alpha[n] = v
    return CoeffTable(weight_times_two=13, alpha=alpha, N=N)
