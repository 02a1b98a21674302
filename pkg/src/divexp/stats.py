"""Student-t distribution via the regularized incomplete beta function.

Only what the safety tests need: CDF, survival function and quantile.
"""
import math
from functools import lru_cache

_TINY = 1e-300
_EPS = 1e-15
_MAX_ITER = 500


def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _t_central(t, df):
    """P(0 < T < |t|), accurate for small |t| where the tail form cancels."""
    t2 = t * t
    if t2 < df:
        return 0.5 * betainc(0.5, 0.5 * df, t2 / (df + t2))
    return 0.5 - 0.5 * betainc(0.5 * df, 0.5, df / (df + t2))


def t_sf(t, df):
    """Upper tail probability P(T > t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if abs(t) < 1.0:
        tail = 0.5 - _t_central(t, df)
    else:
        tail = 0.5 * betainc(0.5 * df, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def t_cdf(t, df):
    return 1.0 - t_sf(t, df) if t >= 0 else t_sf(-t, df)


def t_pdf(t, df):
    log_norm = (math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df)
                - 0.5 * math.log(df * math.pi))
    return math.exp(log_norm - 0.5 * (df + 1) * math.log1p(t * t / df))


@lru_cache(maxsize=4096)
def t_ppf(p, df):
    """Quantile of Student's t: the t with P(T <= t) = p.

    Safeguarded Newton iteration; relative tolerance 1e-12.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if df <= 0:
        raise ValueError("df must be positive")
    if p == 0.5:
        return 0.0
    sign = 1.0 if p > 0.5 else -1.0
    # near the centre solve on the central mass, in the tails on the tail mass;
    # both targets are exact in floating point
    in_tail = abs(p - 0.5) >= 0.25
    target = min(p, 1.0 - p) if in_tail else abs(p - 0.5)

    def resid(t):
        return t_sf(t, df) - target if in_tail else target - _t_central(t, df)

    lo, hi = 0.0, 1.0
    while resid(hi) > 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ArithmeticError("quantile out of range")
    t = 0.5 * (lo + hi)
    for _ in range(200):
        err = resid(t)
        if err > 0:
            lo = t
        else:
            hi = t
        nxt = t + err / t_pdf(t, df)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - t) <= 1e-13 * abs(nxt) or hi - lo <= 1e-15 * hi:
            return sign * nxt
        t = nxt
    return sign * t
