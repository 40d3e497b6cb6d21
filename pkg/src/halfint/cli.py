"""Command-line orchestration: sign-change statistics, moment scans,
central-value sweeps, exponential-sum grids, and the self-test suite.

Subcommands: coeffs, signchanges, waldspurger, moments, shifted, jutila,
selftest. Output is CSV (header row, LF endings, 6-decimal ratios) or JSON
lines with --format jsonl. A plain `key = value` config file may supply any
long-option default; explicit flags win; unknown keys are rejected. Exit
codes: 0 success, 1 suite/verification failure, 2 usage error, 3
resource/budget error.

All reductions run in a fixed order, so reports are byte-identical across
runs and thread counts.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import expsums, lvalue, mollifier, qseries
from .arith import enumerate_nflat, kronecker, odd_squarefree_flags
from .errors import (
    BudgetExceededError,
    CapacityError,
    ChecksumError,
    FormatError,
    InconsistencyError,
    InsufficientTableError,
)
from .hecke import build_hecke_table
from .qseries import CoeffTable, delta_halfintegral, load_coeffs, save_coeffs

__all__ = [
    "SignChangeReport",
    "cmd_signchanges",
    "cmd_moments",
    "cmd_waldspurger",
    "cmd_shifted",
    "cmd_jutila",
    "cmd_selftest",
    "main",
]


@dataclass(frozen=True)
class SignChangeReport:
    X: int
    index_set: str
    S: int
    N_set: int
    ratio: float
    zeros_skipped: int


def cmd_signchanges(X: int, index_set: str, coeffs: CoeffTable) -> SignChangeReport:
    """Count adjacent sign changes of alpha over the chosen index set.

    index_set "all_supported": the support lattice n = 0,1 mod 4 (zero
    entries inside the lattice are skipped in the count of changes but kept
    in N_set). index_set "nflat": discriminants 8m with m odd square-free.
    """
    if X > coeffs.N:
        raise InsufficientTableError(f"need coefficients to {X}, table holds {coeffs.N}")
    s = coeffs.sign_array()
    n = np.arange(X + 1)
    if index_set == "all_supported":
        idx = n[(n >= 1) & ((n % 4 == 0) | (n % 4 == 1))]
    elif index_set == "nflat":
        flags = odd_squarefree_flags(X // 8)
        idx = 8 * np.nonzero(flags)[0]
    else:
        raise ValueError(f"unknown index set {index_set!r}")
    signs = s[idx]
    nz = signs[signs != 0]
    changes = int(np.count_nonzero(nz[1:] != nz[:-1]))
    return SignChangeReport(
        X=X,
        index_set=index_set,
        S=changes,
        N_set=int(idx.size),
        ratio=changes / idx.size if idx.size else 0.0,
        zeros_skipped=int(signs.size - nz.size),
    )


def _mollifier_scan(coeffs: CoeffTable, params, t, nmax: int) -> np.ndarray:
    """M((-1)^k 8n; 1/kappa) for 1 <= n <= nmax, vectorized over n."""
    narr = np.arange(nmax + 1, dtype=np.int64)
    logfac = math.log(params.x) ** (1.0 / (2.0 * params.kappa))
    m_total = np.full(nmax + 1, logfac)
    for j in range(params.J + 1):
        p_arr = np.zeros(nmax + 1)
        for p in params.primes[j]:
            table = np.fromiter(
                (kronecker(r, p) for r in range(p)), dtype=np.float64, count=p
            )
            p_arr += (
                mollifier.coeff_a(p, params.J, params, t)
                / math.sqrt(p)
                * table[(8 * narr) % p]
            )
        m_total *= mollifier._e_truncated_vec(-p_arr / params.kappa, params.ell[j])
    return m_total


def cmd_moments(
    X_list: list,
    coeffs: CoeffTable,
    mollifier_params=None,
    hecke_table=None,
) -> list:
    """Per-block ratios (1/X) sum_{n<=X, 2n square-free} c(8n)^2, plus the
    mollified second and fourth moment ratios when params are given."""
    xmax = max(X_list)
    if 8 * xmax > coeffs.N:
        raise InsufficientTableError(f"need coefficients to {8 * xmax}")
    c = coeffs.c_array()
    flags = odd_squarefree_flags(xmax)  # 2n square-free <=> n odd square-free
    n = np.arange(xmax + 1)
    csq = np.where(flags, c[8 * n] ** 2, 0.0)
    rows = []
    if mollifier_params is not None:
        msq = _mollifier_scan(coeffs, mollifier_params, hecke_table, xmax) ** 2
    for X in X_list:
        row = {"X": X, "second": float(np.add.reduce(csq[: X + 1])) / X}
        if mollifier_params is not None:
            m2 = csq[: X + 1] * msq[: X + 1]
            row["mollified_second"] = float(np.add.reduce(m2)) / X
            row["mollified_fourth"] = float(
                np.add.reduce(csq[: X + 1] * m2 * msq[: X + 1])
            ) / X
        rows.append(row)
    return rows


def cmd_waldspurger(d_max: int, tol: float, hecke_table=None, coeffs=None) -> list:
    ds = [d for d in enumerate_nflat(d_max) if d >= 8]
    need = math.ceil(d_max * max(8.0, (6 + math.log(1 / tol)) / (2 * math.pi)))
    if hecke_table is None or hecke_table.N < need:
        hecke_table = build_hecke_table(need)
    if coeffs is None or coeffs.N < d_max:
        coeffs = delta_halfintegral(d_max)
    rows = []
    for d in ds:
        res = lvalue.central_lvalue(d, hecke_table, tol)
        ratio = lvalue.waldspurger_ratio(d, coeffs, hecke_table, tol)
        rows.append(
            {
                "d": d,
                "alpha": coeffs.a(d),
                "lvalue": res.value,
                "ratio": float("nan") if ratio is None else ratio,
            }
        )
    return rows


def cmd_shifted(h: int, v: int, Delta: int, xgrid: list, coeffs: CoeffTable) -> list:
    rows = []
    for X in xgrid:
        val = expsums.shifted_convolution(h, v, Delta, X, coeffs)
        rows.append({"X": X, "re": val.real, "im": val.imag, "abs": abs(val)})
    return rows


def cmd_jutila(qgrid: list, eta: float, Delta: int) -> list:
    rows = []
    for Q in qgrid:
        sys_ = expsums.build_jutila_system(Q, eta, Delta)
        rows.append(
            {
                "Q": Q,
                "arcs": sys_.L,
                "defect": expsums.jutila_l2_defect(Q, eta, Delta),
            }
        )
    return rows


# -- self-test suites ------------------------------------------------------------


def _suite_sieves():
    from .arith import build_sieves

    t = build_sieves(10_000)
    worst = 0.0
    assert t.mu[6] == 1 and t.mu[4] == 0 and int(t.sigma3[6]) == 252
    assert t.liouville[8] == -1 and t.phi[1] == 1 and t.big_omega[1] == 0
    for n in range(2, 2000):
        acc = sum(int(t.mu[d]) for d in range(1, n + 1) if n % d == 0)
        worst = max(worst, abs(acc))
    return worst, worst == 0.0


def _suite_gauss():
    worst = 0.0
    for n in range(1, 1000, 2):
        for l in range(-60, 61):
            if l == 0:
                continue
            bf = expsums.gauss_sum_bruteforce(l, n)
            cf = expsums.gauss_sum_closed(l, n)
            err = abs(bf - cf) / max(1.0, abs(cf))
            worst = max(worst, err)
        root = math.isqrt(n)
        g0 = expsums.gauss_sum_closed(0, n)
        expect = _phi_small(n) if root * root == n else 0.0
        worst = max(worst, abs(expsums.gauss_sum_bruteforce(0, n) - g0), abs(g0 - expect))
    return worst, worst < 1e-10


def _phi_small(n: int) -> float:
    from .arith import factorize_small

    out = 1
    for p, e in factorize_small(n).prime_powers:
        out *= p ** (e - 1) * (p - 1)
    return float(out)


def _suite_wkernel():
    worst = 0.0
    for k in (2, 6):
        for x in (0.01, 0.05, 0.1, 0.3, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0):
            closed = lvalue.w_kernel(x, k)
            oracle = lvalue.w_kernel_oracle(x, k)
            worst = max(worst, abs(closed - oracle))
    return worst, worst < 1e-10


def _suite_poisson():
    worst = 0.0
    for n in range(1, 46, 2):
        worst = max(worst, expsums.poisson_check(n, 5.0), expsums.poisson_check(n, 3.0))
    return worst, worst < 1e-8


def _suite_delta():
    fast = delta_halfintegral(2000)
    ref = qseries.delta_halfintegral_reference(2000)
    same = fast.alpha == ref.alpha
    support_ok = fast.support_violations().size == 0
    tau = qseries.delta_integral(2000)
    naive = _tau_naive(2000)
    return float(not (same and support_ok and tau == naive)), same and support_ok and tau == naive


def _tau_naive(N: int) -> list:
    coeffs = [0] * N
    coeffs[0] = 1
    for _ in range(24):
        for n in range(1, N):
            for i in range(N - 1, n - 1, -1):
                coeffs[i] -= coeffs[i - n]
    return [0] + coeffs


def _suite_shimura():
    from .hecke import shimura_identity_check

    coeffs = delta_halfintegral(10_000)
    tab = build_hecke_table(110)
    bad = 0
    for d in [1] + enumerate_nflat(10_000):
        nmax = math.isqrt(10_000 // d)
        for n in range(1, nmax + 1):
            if not shimura_identity_check(d, n, coeffs, tab):
                bad += 1
    return float(bad), bad == 0


def _suite_modularity():
    coeffs = delta_halfintegral(10_000)
    worst = 0.0
    for gamma, z in modularity_panel():
        worst = max(worst, expsums.modularity_check(gamma, z, coeffs))
    return worst, worst < 1e-8


def modularity_panel() -> list:
    """20 fixed matrix/point pairs with both Im z and Im gamma(z) above the
    series guard."""
    pairs = []
    cds = [
        (4, 1), (4, 3), (4, 5), (4, 7), (4, 9), (4, 11),
        (8, 1), (8, 3), (8, 5), (8, 7), (8, 9), (8, 11),
        (12, 1), (12, 5), (12, 7), (12, 11),
        (16, 1), (16, 3), (16, 5), (16, 7),
    ]
    for c, d in cds:
        a = pow(d, -1, c)
        b = (a * d - 1) // c
        z = complex(-d / c + 0.01, 1.0 / c)
        pairs.append(((a, b, c, d), z))
    return pairs


def _suite_mollifier():
    tab = build_hecke_table(200)
    params = mollifier.build_params(
        x=1.0e6, l=2.0, kappa=0.5, eta2=0.2, c0=2.0, theta0_override=0.1
    )
    worst = 0.0
    for m in range(1, 400):
        mv = mollifier.mollifier_value(8 * m, 0.5, params, tab)
        if mv.value <= 0:
            return 1.0, False
        for j in range(params.J + 1):
            enum = mollifier.m_factor(8 * m, j, 0.5, params, tab, method="enumerate")
            iden = mollifier.m_factor(8 * m, j, 0.5, params, tab, method="identity")
            worst = max(worst, abs(enum - iden) / max(1.0, abs(iden)))
    for tiny, l in zip(tiny_mollifier_configs(), (2.0, 4.0, 2.0)):
        for m in (8, 24, 40, 104):
            if not mollifier.dirichlet_expansion_check(m, 0.5, l, tiny, tab):
                return 1.0, False
    for ell in (4, 8, 16, 64):
        for t in np.linspace(-3 * ell, ell / math.e**2, 41):
            lhs = math.exp(t)
            rhs = (1 + math.exp(-ell / 2)) * mollifier.e_truncated(float(t), ell)
            if lhs > rhs * (1 + 1e-12):
                return 1.0, False
    return worst, worst < 1e-12


def tiny_mollifier_configs() -> list:
    """Three enumerable mollifier configurations for the expansion identity:
    one block of three primes (l k = 1), one single-prime block (l k = 2),
    and a two-block split whose leading block holds no prime."""
    logx = math.log(1.0e6)
    one_block = mollifier.build_params(
        x=1.0e6, l=2.0, kappa=0.5, eta2=0.12, c0=2.0,
        theta0_override=math.log(8.0) / logx,
    )
    single_prime = mollifier.build_params(
        x=1.0e6, l=4.0, kappa=0.5, eta2=0.08, c0=2.0,
        theta0_override=math.log(3.5) / logx,
    )
    two_block = mollifier.build_params(
        x=1.0e6, l=2.0, kappa=0.5, eta2=0.1, c0=2.0,
        theta0_override=math.log(2.4) / logx,
    )
    return [one_block, single_prime, two_block]


def _suite_jutila_certify():
    f = expsums.jutila_l2_defect(600, 0.5, 1)
    e = expsums.jutila_l2_defect(600, 0.5, 1, exact=True)
    return abs(f - e), abs(f - e) < 1e-9


_SUITES = [
    ("sieves", _suite_sieves),
    ("gauss_oracle", _suite_gauss),
    ("w_kernel_oracle", _suite_wkernel),
    ("poisson_identity", _suite_poisson),
    ("delta_tables", _suite_delta),
    ("shimura_identity", _suite_shimura),
    ("modularity_panel", _suite_modularity),
    ("mollifier_identities", _suite_mollifier),
    ("jutila_certify", _suite_jutila_certify),
]


def cmd_selftest() -> list:
    rows = []
    for name, fn in _SUITES:
        metric, ok = fn()
        rows.append({"suite": name, "status": "pass" if ok else "FAIL",
                     "metric": float(metric)})
    return rows


# -- output, config, entry point ---------------------------------------------------


def _emit(rows: list, fmt: str, out) -> None:
    if not rows:
        return
    if fmt == "jsonl":
        for r in rows:
            out.write(json.dumps(r, sort_keys=True) + "\n")
        return
    cols = list(rows[0].keys())
    out.write(",".join(cols) + "\n")
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            if isinstance(v, float):
                cells.append(f"{v:.6f}" if c == "ratio" else repr(v))
            else:
                cells.append(str(v))
        out.write(",".join(cells) + "\n")


def _load_config(path: str) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            cfg[key] = val
    return cfg


def _apply_config(args: argparse.Namespace, cfg: dict, parser: argparse.ArgumentParser):
    known = vars(args)
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known:
            parser.error(f"unknown config key {key!r}")
        if known[dest] is None:
            setattr(args, dest, val)


def _int_list(text: str) -> list:
    return [int(float(tok)) for tok in text.split(",") if tok.strip()]


def _parse_mollify(text: str):
    kv = {}
    for tok in text.split(","):
        if not tok.strip():
            continue
        k, v = tok.split("=", 1)
        kv[k.strip()] = float(v)
    return mollifier.build_params(
        x=kv.get("x", 2.0e6),
        C=kv.get("C", 4.0),
        l=kv.get("l", 2.0),
        kappa=kv.get("kappa", 0.5),
        eta1=kv.get("eta1", 1.0),
        eta2=kv.get("eta2", 0.2),
        c0=kv.get("c0", 2.0),
        theta0_override=kv.get("theta0", None),
    )


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="halfint",
        description="Half-integral weight form coefficients, twisted central "
        "values, mollifiers, and sign-change statistics.",
    )
    ap.add_argument("--config", help="key = value config file")
    ap.add_argument("--format", choices=["csv", "jsonl"], default=None)
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (1 = reference path); results do not depend on it")
    ap.add_argument("--out", default=None, help="write report here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    # config-fillable options carry no argparse defaults or required flags;
    # requiredness and defaults resolve after the config merge

    p = sub.add_parser("coeffs", help="build and save the coefficient table")
    p.add_argument("--weight")
    p.add_argument("--limit")
    p.add_argument("--out", dest="coeffs_out")

    p = sub.add_parser("signchanges", help="sign-change statistics")
    p.add_argument("--limit")
    p.add_argument("--set", choices=["all", "nflat"])
    p.add_argument("--coeffs")

    p = sub.add_parser("waldspurger", help="squared-coefficient / central-value ratios")
    p.add_argument("--dmax")
    p.add_argument("--tol")

    p = sub.add_parser("moments", help="dyadic moment ratios")
    p.add_argument("--blocks", help="comma-separated X values")
    p.add_argument("--coeffs")
    p.add_argument("--mollify", help="key=value,... mollifier params")

    p = sub.add_parser("shifted", help="shifted convolution on an X grid")
    p.add_argument("--h")
    p.add_argument("--delta")
    p.add_argument("--v")
    p.add_argument("--xgrid")
    p.add_argument("--coeffs")

    p = sub.add_parser("jutila", help="circle-method L2 defect on a Q grid")
    p.add_argument("--qgrid")
    p.add_argument("--eta")
    p.add_argument("--delta")

    sub.add_parser("selftest", help="oracle-equivalence and identity suites")
    return ap


def _require(args, ap, *names):
    for name in names:
        if getattr(args, name, None) is None:
            ap.error(f"the following argument is required: --{name.replace('_', '-')}")


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    if args.config:
        if not os.path.exists(args.config):
            ap.error(f"config file {args.config} not found")
        try:
            cfg = _load_config(args.config)
        except ValueError as exc:
            ap.error(str(exc))
        _apply_config(args, cfg, ap)
    fmt = args.format or "csv"
    if args.threads is not None and int(args.threads) < 1:
        ap.error("--threads must be >= 1")
    # every command runs in seconds single-threaded; reductions are
    # order-fixed, so the thread count can never change a report
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        rows, status = _dispatch(args, ap)
        _emit(rows, fmt, out)
        return status
    except (BudgetExceededError, CapacityError, InsufficientTableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, ChecksumError, InconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if args.out:
            out.close()


def _load_table(path: str, ap) -> CoeffTable:
    if not os.path.exists(path):
        ap.error(f"coefficient file {path} not found")
    return load_coeffs(path)


def _dispatch(args, ap):
    cmd = args.command
    if cmd == "coeffs":
        _require(args, ap, "limit", "coeffs_out")
        if args.weight is not None and int(args.weight) != 13:
            ap.error("only weight 13 (the weight-13/2 form) is supported")
        parent = os.path.dirname(os.path.abspath(args.coeffs_out))
        if not os.path.isdir(parent):
            ap.error(f"output directory {parent} does not exist")
        table = delta_halfintegral(int(args.limit))
        save_coeffs(table, args.coeffs_out)
        return [{"written": args.coeffs_out, "N": table.N}], 0
    if cmd == "signchanges":
        _require(args, ap, "limit", "coeffs")
        table = _load_table(args.coeffs, ap)
        which = "all_supported" if args.set in ("all", None) else "nflat"
        rep = cmd_signchanges(int(args.limit), which, table)
        return [dict(vars(rep))], 0
    if cmd == "waldspurger":
        dmax = int(args.dmax) if args.dmax is not None else 2000
        tol = float(args.tol) if args.tol is not None else 1e-8
        rows = cmd_waldspurger(dmax, tol)
        vals = np.array([r["ratio"] for r in rows if not math.isnan(r["ratio"])])
        rel_std = float(vals.std() / vals.mean()) if vals.size else float("nan")
        print(f"# rel_std_dev = {rel_std:.3e}", file=sys.stderr)
        return rows, 0 if rel_std < 1e-3 else 1
    if cmd == "moments":
        _require(args, ap, "blocks", "coeffs")
        table = _load_table(args.coeffs, ap)
        params = None
        htab = None
        if args.mollify is not None:
            params = _parse_mollify(args.mollify)
            htab = build_hecke_table(max(200, math.ceil(params.intervals[-1][1]) + 1))
        rows = cmd_moments(_int_list(args.blocks), table, params, htab)
        return rows, 0
    if cmd == "shifted":
        _require(args, ap, "h", "xgrid", "coeffs")
        table = _load_table(args.coeffs, ap)
        delta = int(args.delta) if args.delta is not None else 1
        v = int(args.v) if args.v is not None else 0
        rows = cmd_shifted(int(args.h), v, delta, _int_list(args.xgrid), table)
        return rows, 0
    if cmd == "jutila":
        _require(args, ap, "qgrid")
        eta = float(args.eta) if args.eta is not None else 0.5
        delta = int(args.delta) if args.delta is not None else 1
        rows = cmd_jutila(_int_list(args.qgrid), eta, delta)
        return rows, 0
    if cmd == "selftest":
        rows = cmd_selftest()
        ok = all(r["status"] == "pass" for r in rows)
        return rows, 0 if ok else 1
    ap.error(f"unknown command {cmd}")


if __name__ == "__main__":
    sys.exit(main())
