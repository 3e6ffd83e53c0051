"""Extended-real arithmetic with the conventions used throughout the package.

Extended reals are plain IEEE doubles with ``math.inf`` sentinels.  Two
conventions differ from IEEE and are applied by the helpers below:

* ``(+inf) + (-inf) = +inf`` (upper addition), and
* ``0 * (+inf) = +inf`` and ``0 * (-inf) = -inf`` (scaling keeps infinities).

These make sums of possibly-infinite function values well defined with +inf
dominating, which is the right behavior for indicator-function arithmetic.
"""

from __future__ import annotations

import math
from typing import Iterable

ExtReal = float

INF: ExtReal = math.inf
NEG_INF: ExtReal = -math.inf


def is_finite(value: ExtReal) -> bool:
    """True when value is an ordinary real (not +-inf, not NaN)."""
    return math.isfinite(value)


def ext_add(*terms: ExtReal) -> ExtReal:
    """Sum with +inf dominating: any +inf term makes the sum +inf.

    Without infinities this is the ordinary float sum.
    """
    if any(t == INF for t in terms):
        return INF
    if any(t == NEG_INF for t in terms):
        return NEG_INF
    return math.fsum(terms)


def ext_sum(terms: Iterable[ExtReal]) -> ExtReal:
    """Iterable form of ext_add."""
    return ext_add(*terms)


def ext_mul(scalar: float, value: ExtReal) -> ExtReal:
    """Scale an extended real; zero keeps infinities instead of producing NaN."""
    if value == INF:
        return INF if scalar >= 0 else NEG_INF
    if value == NEG_INF:
        return NEG_INF if scalar >= 0 else INF
    return scalar * value


def ext_sub(a: ExtReal, b: ExtReal) -> ExtReal:
    """a - b with +inf dominating, i.e. ext_add(a, ext_mul(-1, b))."""
    return ext_add(a, ext_mul(-1.0, b))
