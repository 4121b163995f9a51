"""Scalar special functions used by the distribution and threshold machinery.

The Airy function is evaluated from its Maclaurin series on a central
interval and from the standard asymptotic expansions outside it; the
switchover points are placed where the two branches agree to better than
1e-10 in absolute error.  The standard normal CDF wraps the C library's
erfc; the quantile refines a rational initial estimate with Newton steps
until the CDF round-trip is exact to double precision.
"""

from __future__ import annotations

import math
import statistics

__all__ = [
    "airy_ai",
    "airy_ai_prime",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
]

# Ai(0) = 3**(-2/3)/gamma(2/3) and -Ai'(0) = 3**(-1/3)/gamma(1/3).
_AI_ZERO = 0.3550280538878172392600631860041831763980
_AIP_ZERO = -0.2588194037928067984051835601892039634793

# Maclaurin series below, asymptotic expansions beyond.  The negative
# switchover sits much further out than the positive one: the oscillatory
# expansion converges slowly while the series only loses ~5e-12 to
# cancellation at -7.4.
_SERIES_NEG = -7.4
_SERIES_POS = 4.9

_SQRT_PI = math.sqrt(math.pi)
_QUARTER_PI = math.pi / 4.0


def _airy_series(x: float) -> tuple[float, float]:
    """Maclaurin evaluation of (Ai(x), Ai'(x)); converges for all x."""
    x3 = x * x * x
    # Ai: f = sum a_k x^{3k}, g = sum b_k x^{3k+1}.
    f_term, f_sum = 1.0, 1.0
    g_term, g_sum = x, x
    # Ai': term-wise derivatives of f and g.  The f' series has no
    # constant term; its leading term x^2/2 is added by the first loop pass.
    fp_term = 0.5 * x * x
    fp_sum = 0.0
    gp_term, gp_sum = 1.0, 1.0
    k = 0
    while True:
        f_term *= x3 / ((3 * k + 2) * (3 * k + 3))
        g_term *= x3 / ((3 * k + 3) * (3 * k + 4))
        gp_term *= x3 / ((3 * k + 1) * (3 * k + 3))
        if k >= 1:
            fp_term *= x3 / ((3 * k) * (3 * k + 2))
        f_sum += f_term
        g_sum += g_term
        gp_sum += gp_term
        fp_sum += fp_term
        k += 1
        if abs(f_term) < 1e-18 and abs(g_term) < 1e-18 and k > 3:
            break
        if k > 200:  # pragma: no cover - series converges long before this
            break
    ai = _AI_ZERO * f_sum + _AIP_ZERO * g_sum
    aip = _AI_ZERO * fp_sum + _AIP_ZERO * gp_sum
    return ai, aip


def _asymptotic_coeffs(zeta: float, even_odd: bool) -> tuple[float, float, float, float]:
    """Partial sums of the u_k / v_k asymptotic series in 1/zeta.

    Returns (u_even, u_odd, v_even, v_odd) when ``even_odd`` is True
    (needed on the oscillatory side), else the plain alternating sums
    packed into the first and third slots.
    """
    u, v = 1.0, 1.0
    pow_z = 1.0
    u_even, u_odd = 1.0, 0.0
    v_even, v_odd = 1.0, 0.0
    u_alt, v_alt = 1.0, 1.0
    prev = math.inf
    for k in range(40):
        u_next = u * (6 * k + 1) * (6 * k + 5) / (72.0 * (k + 1))
        v_next = v * (6 * k + 7) * (6 * k - 1) / (72.0 * (k + 1))
        pow_z /= zeta
        term_u = u_next * pow_z
        if abs(term_u) >= prev:
            break
        prev = abs(term_u)
        sign = -1.0 if (k + 1) % 2 else 1.0
        if even_odd:
            # split into even/odd powers of 1/zeta with signs (-1)^j on
            # the j-th retained term of each subsequence
            if (k + 1) % 2 == 0:
                u_even += term_u * (-1.0 if ((k + 1) // 2) % 2 else 1.0)
                v_even += v_next * pow_z * (-1.0 if ((k + 1) // 2) % 2 else 1.0)
            else:
                u_odd += term_u * (-1.0 if ((k + 1) // 2) % 2 else 1.0)
                v_odd += v_next * pow_z * (-1.0 if ((k + 1) // 2) % 2 else 1.0)
        else:
            u_alt += sign * term_u
            v_alt += sign * v_next * pow_z
        u, v = u_next, v_next
    if even_odd:
        return u_even, u_odd, v_even, v_odd
    return u_alt, 0.0, v_alt, 0.0


def _airy_asymptotic_pos(x: float) -> tuple[float, float]:
    zeta = (2.0 / 3.0) * x * math.sqrt(x)
    u_sum, _, v_sum, _ = _asymptotic_coeffs(zeta, even_odd=False)
    root4 = x ** 0.25
    pre = math.exp(-zeta) / (2.0 * _SQRT_PI)
    return pre * u_sum / root4, -pre * root4 * v_sum


def _airy_asymptotic_neg(x: float) -> tuple[float, float]:
    z = -x
    zeta = (2.0 / 3.0) * z * math.sqrt(z)
    u_even, u_odd, v_even, v_odd = _asymptotic_coeffs(zeta, even_odd=True)
    root4 = z ** 0.25
    s = math.sin(zeta + _QUARTER_PI)
    c = math.cos(zeta + _QUARTER_PI)
    # odd sums enter with an extra 1/zeta already included via pow_z, but
    # the leading odd term starts at k=0 of its subsequence: u_odd above
    # accumulated u_1/zeta, -u_3/zeta^3, ... directly.
    ai = (s * u_even - c * u_odd) / (_SQRT_PI * root4)
    aip = -(root4 / _SQRT_PI) * (c * v_even + s * v_odd)
    return ai, aip


def _airy_pair(x: float) -> tuple[float, float]:
    if x != x:
        raise ValueError("airy_ai: input must not be NaN")
    if x == math.inf:
        return 0.0, 0.0
    if x == -math.inf:
        raise ValueError("airy_ai: input must be finite or +inf")
    if _SERIES_NEG <= x <= _SERIES_POS:
        return _airy_series(x)
    if x > 0:
        return _airy_asymptotic_pos(x)
    return _airy_asymptotic_neg(x)


def airy_ai(x: float) -> float:
    """Airy function Ai(x) for real x, absolute error below 1e-10 on [-10, 10]."""
    return _airy_pair(x)[0]


def airy_ai_prime(x: float) -> float:
    """Derivative Ai'(x), same evaluation strategy and accuracy as airy_ai."""
    return _airy_pair(x)[1]


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc; accurate to ~1e-15, monotone, Phi(-x) = 1 - Phi(x)."""
    if x != x:
        raise ValueError("std_normal_cdf: input must not be NaN")
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


_NORMAL = statistics.NormalDist()


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF on (0, 1).

    A rational initial estimate is polished with Newton steps so that
    std_normal_cdf(result) matches p to full double precision wherever the
    density is representable.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"std_normal_quantile: p must lie in (0, 1), got {p!r}")
    x = _NORMAL.inv_cdf(p)
    for _ in range(2):
        density = std_normal_pdf(x)
        if density <= 1e-300:
            break
        x -= (std_normal_cdf(x) - p) / density
    return x
