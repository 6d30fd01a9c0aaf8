"""Closed-form constants behind the deviation bounds.

Every headline constant is a composition of c_alpha, the exponent psi,
and one of two operating points: the sqrt-bound point (7/18, 0.1) or the
majority-vote point (1/2, 0.12). The quoted figures elsewhere in the
package are these exact values rounded up at the displayed precision,
so each calculator here returns a number slightly below its quote.
"""

from __future__ import annotations

import math

from .median import c_alpha, psi

__all__ = [
    "ALPHA_STAR",
    "P_STAR",
    "VOTE_ALPHA",
    "VOTE_P",
    "mean_factor",
    "mean_factor_sharp",
    "coordinatewise_factor",
    "selector_factor",
    "block_cap",
    "selector_block_cap",
    "trace_sqrt_factor",
    "trace_linear_factor",
    "gap_factor",
    "projector_factor",
    "p_star",
]

ALPHA_STAR = 7.0 / 18.0
P_STAR = 0.1
VOTE_ALPHA = 0.5
VOTE_P = 0.12


def mean_factor() -> float:
    """c_a sqrt(2/(p psi)) at (7/18, 0.1): 10.7363, quoted as 11."""
    return c_alpha(ALPHA_STAR) * math.sqrt(2.0 / (P_STAR * psi(ALPHA_STAR, P_STAR)))


def mean_factor_sharp() -> float:
    """c_a / sqrt(p psi) at (7/18, 0.1): 7.5918, quoted as 7.6."""
    return c_alpha(ALPHA_STAR) / math.sqrt(P_STAR * psi(ALPHA_STAR, P_STAR))


def coordinatewise_factor() -> float:
    """1/sqrt(p psi) at the vote point (1/2, 0.12): 4.3977, quoted as 4.4."""
    return 1.0 / math.sqrt(VOTE_P * psi(VOTE_ALPHA, VOTE_P))


def selector_factor() -> float:
    """3/sqrt(p psi) at the vote point: 13.1931, quoted as 13.2."""
    return 3.0 * coordinatewise_factor()


def block_cap() -> float:
    """1/psi at (7/18, 0.1), the blocks-per-log(1/delta) rate: 3.4295, quoted 3.5."""
    return 1.0 / psi(ALPHA_STAR, P_STAR)


def selector_block_cap() -> float:
    """1/psi at the vote point: 2.3207, quoted as 2.4."""
    return 1.0 / psi(VOTE_ALPHA, VOTE_P)


def trace_sqrt_factor() -> float:
    """2 c_a / sqrt(p psi) at (7/18, 0.1): 15.1836, quoted as 15.2."""
    return 2.0 * mean_factor_sharp()


def trace_linear_factor() -> float:
    """4 c_a / (p psi) at (7/18, 0.1): 177.835, quoted as 178."""
    return 4.0 * c_alpha(ALPHA_STAR) / (P_STAR * psi(ALPHA_STAR, P_STAR))


def gap_factor() -> float:
    """Eigengap threshold constant 44 = 4 x the quoted mean constant."""
    return 4.0 * math.ceil(mean_factor())


def projector_factor() -> float:
    """Projector deviation constant 22 = 2 x the quoted mean constant."""
    return 2.0 * math.ceil(mean_factor())


def p_star(alpha: float) -> float:
    """Largest head probability with a full unit of exponent: psi(alpha; p) >= 1.

    Bisection on p in (0, alpha), run to floating-point resolution, so
    psi(alpha; p_star(alpha)) = 1 to well under 1e-8 for any alpha away
    from the endpoints.
    """
    if not (0.0 < alpha <= 0.5):
        raise ValueError(f"alpha must lie in (0, 1/2], got {alpha!r}")
    lo = 1e-300
    hi = alpha * (1.0 - 1e-12)
    if psi(alpha, hi) >= 1.0:
        return hi
    # psi -> inf as p -> 0+, so the bracket is guaranteed; a failure here
    # means the exponent itself went numerically bad
    if not psi(alpha, lo) >= 1.0:
        raise ArithmeticError("exponent bracket failed; psi lost monotonicity")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo
        if psi(alpha, mid) >= 1.0:
            lo = mid
        else:
            hi = mid
