"""Exact coefficient tables for a weight-13/2 Hecke cusp form, central values
of the quadratic twists of its weight-12 lift, an Euler-product mollifier,
the exponential-sum toolkit behind their analysis, and a CLI that tabulates
sign-change statistics of the coefficients."""

from .arith import (
    build_sieves,
    enumerate_nflat,
    factorize,
    is_fundamental_discriminant,
    kronecker,
)
from .hecke import (
    build_hecke_table,
    find_signflip_prime,
    lambda_f,
    shimura_identity_check,
    signflip_verify,
)
from .lvalue import a_factor, central_lvalue, first_moment_scan, w_kernel, waldspurger_ratio
from .qseries import (
    CoeffTable,
    PowerSeries,
    delta_halfintegral,
    delta_integral,
    eisenstein_g,
    load_coeffs,
    ps_dilate,
    ps_mul,
    save_coeffs,
    theta_series,
    u_operator,
)

__version__ = "0.1.0"
