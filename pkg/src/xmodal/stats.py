"""Student's t distribution via the regularised incomplete beta function."""

import math

import numpy as np

from .errors import ContractError

CF_TOL = 1e-12
CF_MAX_ITER = 10000
_TINY = 1e-300


def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a, b, x, y=None):
    """Regularised incomplete beta I_x(a, b).

    ``y`` may carry 1 - x when the caller can form it without cancellation.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    y = 1.0 - x if y is None else y
    if x == 0.0 or y == 0.0:
        return 1.0 - y
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log(y))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def t_sf_two_sided(t, df):
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return betainc(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))


def t_cdf(t, df):
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t >= 0 else tail


def paired_t_test(a, b):
    """Paired two-sided t-test on per-fold metrics.

    Returns a dict with ``t``, ``p``, ``df`` and ``degenerate`` (True when the
    differences have zero variance but non-zero mean; then p is reported as 0).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("paired t-test needs two equal-length 1-d sequences")
    n = len(a)
    if n < 2:
        raise ContractError("paired t-test needs at least two pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return {"t": 0.0, "p": 1.0, "df": df, "degenerate": False}
        return {"t": math.copysign(math.inf, mean), "p": 0.0, "df": df, "degenerate": True}
    t = mean / (sd / math.sqrt(n))
    return {"t": t, "p": t_sf_two_sided(t, df), "df": df, "degenerate": False}
