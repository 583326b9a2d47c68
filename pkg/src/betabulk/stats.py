"""Sample summaries and Kolmogorov-Smirnov statistics."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import stats as _st


def summary(x) -> dict:
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = float(np.mean(x)) if n else float("nan")
    var = float(np.var(x, ddof=1)) if n > 1 else 0.0
    return {"mean": mean, "var": var, "se": math.sqrt(var / n) if n else float("nan"), "n": int(n)}


def var_se(x) -> float:
    """Standard error of the sample variance from the fourth central moment."""
    x = np.asarray(x, dtype=float)
    n = x.size
    c = x - x.mean()
    m4 = float(np.mean(c ** 4))
    v = float(np.mean(c ** 2))
    return math.sqrt(max(m4 - v * v, 0.0) / n)


def ks_2samp(a, b) -> tuple[float, float]:
    """Two-sample KS distance and two-sided p-value (ties handled exactly)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    allv = np.concatenate([a, b])
    d = float(np.max(np.abs(np.searchsorted(a, allv, side="right") / a.size
                            - np.searchsorted(b, allv, side="right") / b.size)))
    with warnings.catch_warnings():
        # scipy falls back from the exact to the asymptotic law on heavy ties
        warnings.simplefilter("ignore", RuntimeWarning)
        p = float(_st.ks_2samp(a, b).pvalue)
    if math.isnan(p):
        p = 1.0 if d == 0.0 else 0.0
    return d, p


def ks_1samp(x, cdf) -> tuple[float, float]:
    res = _st.kstest(np.asarray(x, dtype=float), cdf)
    return float(res.statistic), float(res.pvalue)


def within_se(a, b, se, k: float = 3.0) -> bool:
    return abs(a - b) <= k * se
