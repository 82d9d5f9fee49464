"""Closed-form tails of slowly decaying trigonometric integrands.

With no spectral filter the integrands only decay like 1/x^2 (rates) or
1/x (amplitudes). The finite part is integrated numerically; what lies
beyond a cutoff is added from sine/cosine integrals.
"""

from __future__ import annotations

import numpy as np
from scipy.special import sici

# below this |shift| the 1/(u^2 - c^2) kernel is replaced by 1/u^2
_SMALL_SHIFT = 1e-4


def cos_over_x(k: float, x0: float) -> float:
    """int_{x0}^inf cos(k x)/x dx for k != 0, x0 > 0."""
    return -float(sici(abs(k) * x0)[1])


def sin_over_x(k: float, x0: float) -> float:
    """int_{x0}^inf sin(k x)/x dx for x0 > 0."""
    if k == 0:
        return 0.0
    return float(np.sign(k) * (0.5 * np.pi - sici(abs(k) * x0)[0]))


def cos_over_x2(k: float, x0: float) -> float:
    """int_{x0}^inf cos(k x)/x^2 dx for x0 > 0."""
    return float(np.cos(k * x0) / x0 - k * sin_over_x(k, x0))


def cos_over_quadratic(k: float, x0: float, c: float) -> float:
    """int_{x0}^inf cos(k u)/(u^2 - c^2) du for x0 > |c|."""
    c = abs(c)
    if c < _SMALL_SHIFT:
        return cos_over_x2(k, x0)
    if x0 <= c:
        raise ValueError("tail start must exceed the pole at |c|")
    if k == 0:
        return float(np.log((x0 + c) / (x0 - c)) / (2.0 * c))
    kc = k * c
    # 1/(u^2-c^2) = [1/(u-c) - 1/(u+c)] / 2c ; shift each piece onto 1/v
    minus = np.cos(kc) * cos_over_x(k, x0 - c) - np.sin(kc) * sin_over_x(k, x0 - c)
    plus = np.cos(kc) * cos_over_x(k, x0 + c) + np.sin(kc) * sin_over_x(k, x0 + c)
    return float((minus - plus) / (2.0 * c))


def symmetric_exp_over_x(k: float, x0: float) -> complex:
    """Principal value of int_{|x|>x0} exp(-i k x)/x dx."""
    return complex(0.0, -2.0 * sin_over_x(k, x0))


def sinc_squared_tail(x0: float) -> float:
    """int_{x0}^inf 2 (1 - cos v)/v^2 dv, the tail of sinc_half(v)^2."""
    return float(2.0 * (1.0 / x0 - cos_over_x2(1.0, x0)))
