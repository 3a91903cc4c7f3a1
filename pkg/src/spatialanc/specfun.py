"""Bessel and Hankel functions used by the field models and the kernel.

All functions accept scalars or numpy arrays (broadcast against each other)
and return numpy scalars/arrays. The heavy lifting is done by the AMOS/Cephes
routines behind :mod:`scipy.special`; this module pins the validated domain,
adds the derivative recurrences, and refuses to return non-finite values.
"""

import numpy as np
from scipy import special

from .errors import DomainError

MAX_ORDER = 200
MAX_REAL_ARG = 1.0e3
MIN_HANKEL_ARG = 1.0e-6
MAX_COMPLEX_ABS = 100.0
MAX_COMPLEX_IMAG = 30.0


def _check_order(order):
    order = np.asarray(order)
    if order.dtype.kind not in "iu":
        if not np.all(np.isfinite(order)) or np.any(order != np.round(order)):
            raise DomainError("Bessel order must be an integer")
        order = order.astype(int)
    if np.any(order < 0) or np.any(order > MAX_ORDER):
        raise DomainError(f"Bessel order must lie in [0, {MAX_ORDER}]")
    return order


def _check_real_arg(x, lower, strict):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")
    bad_low = np.any(x <= lower) if strict else np.any(x < lower)
    if bad_low:
        op = ">" if strict else ">="
        raise DomainError(f"argument must be {op} {lower}")
    if np.any(x > MAX_REAL_ARG):
        raise DomainError(f"argument must be <= {MAX_REAL_ARG}")
    return x


def _finite(value, name):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{name} overflowed for the requested order/argument")
    return value


def bessel_j(order, x):
    """Bessel function of the first kind J_n(x) for integer n >= 0, real x >= 0."""
    order = _check_order(order)
    x = _check_real_arg(x, 0.0, strict=False)
    return _finite(special.jv(order, x), "J_n")


def bessel_y(order, x):
    """Bessel function of the second kind Y_n(x) for integer n >= 0, x > 0."""
    order = _check_order(order)
    x = _check_real_arg(x, MIN_HANKEL_ARG, strict=True)
    return _finite(special.yv(order, x), "Y_n")


def hankel2(order, x):
    """Hankel function of the second kind H_n^(2)(x) = J_n(x) - j Y_n(x)."""
    order = _check_order(order)
    x = _check_real_arg(x, MIN_HANKEL_ARG, strict=True)
    return _finite(special.hankel2(order, x), "H_n^(2)")


def bessel_j_deriv(order, x):
    """Derivative J_n'(x) via J_n' = J_{n-1} - (n/x) J_n, with J_0' = -J_1.

    At x = 0 the limit is used: J_1'(0) = 1/2, zero for every other order.
    """
    order = _check_order(order)
    x = _check_real_arg(x, 0.0, strict=False)
    order, x = np.broadcast_arrays(order, x)
    out = np.empty(x.shape, dtype=float)
    zero_order = order == 0
    out[zero_order] = -special.jv(1, x[zero_order])
    rest = ~zero_order
    n, xr = order[rest], x[rest]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = special.jv(n - 1, xr) - n / xr * special.jv(n, xr)
    at_origin = xr == 0.0
    d[at_origin] = np.where(n[at_origin] == 1, 0.5, 0.0)
    out[rest] = d
    return _finite(out[()], "J_n'")


def hankel2_deriv(order, x):
    """Derivative H_n^(2)'(x) via the same recurrence as :func:`bessel_j_deriv`."""
    order = _check_order(order)
    x = _check_real_arg(x, MIN_HANKEL_ARG, strict=True)
    order, x = np.broadcast_arrays(order, x)
    prev = special.hankel2(np.abs(order - 1), x)
    # H_{-1} = -H_1
    prev = np.where(order == 0, -prev, prev)
    out = prev - order / x * special.hankel2(order, x)
    return _finite(out[()], "H_n^(2)'")


def bessel_j0_complex(z):
    """J_0(z) for complex z with |z| <= 100 and |Im z| <= 30.

    Outside that box the function raises instead of returning values that
    have not been validated.
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("argument must be finite")
    if np.any(np.abs(z) > MAX_COMPLEX_ABS) or np.any(np.abs(z.imag) > MAX_COMPLEX_IMAG):
        raise DomainError(
            f"complex J_0 validated only for |z| <= {MAX_COMPLEX_ABS}, |Im z| <= {MAX_COMPLEX_IMAG}"
        )
    out = special.jv(0, z)
    # exact zero imaginary part on the real axis
    real_axis = z.imag == 0
    out = np.where(real_axis, special.j0(z.real) + 0j, out)
    return _finite(out[()], "J_0")
