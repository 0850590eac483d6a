"""Log-space binomial tail probabilities and the NFA score.

The detector and the closed-form predictors both reduce to evaluating
``P(K >= k)`` for ``K ~ Binomial(n, p)`` with very small tail masses
(down to 1e-300 and beyond), so everything here is computed in log10
space.  Accuracy target: at least 10 significant decimal digits for
``n <= 1e5``, which rules out plain float64 log-gamma differences.  We
instead accumulate log-factorials with a compensated (Neumaier) sum in
extended precision and sum the tail terms in the linear domain after
factoring out the largest term.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_LN10 = math.log(10.0)

# Extended-precision cumulative log-factorial table, grown on demand.
# _clf_values[i] = log(i!) as np.longdouble; _clf_total/_clf_comp carry the
# raw Neumaier running sum and its compensation so growth can resume.
_clf_values = np.zeros(1, dtype=np.longdouble)
_clf_total = np.longdouble(0.0)
_clf_comp = np.longdouble(0.0)


def _cum_log_fact(n: int) -> np.ndarray:
    """Return ``log(i!)`` for ``i = 0..n`` in extended precision."""
    global _clf_values, _clf_total, _clf_comp
    have = len(_clf_values) - 1
    if n > have:
        new = np.empty(n + 1, dtype=np.longdouble)
        new[: have + 1] = _clf_values
        logs = np.log(np.arange(have + 1, n + 1, dtype=np.longdouble))
        total = _clf_total
        comp = _clf_comp
        # Neumaier compensation keeps the absolute error O(eps * log n!)
        # instead of O(n * eps * log n!).
        for idx, term in enumerate(logs):
            s = total + term
            if abs(total) >= abs(term):
                comp += (total - s) + term
            else:
                comp += (term - s) + total
            total = s
            new[have + 1 + idx] = total + comp
        _clf_values = new
        _clf_total = total
        _clf_comp = comp
    return _clf_values[: n + 1]


def _log_pmf_range(k_lo: int, k_hi: int, n: int, p: float) -> np.ndarray:
    """Natural-log binomial pmf for ``k_lo..k_hi`` (longdouble)."""
    lf = _cum_log_fact(n)
    i = np.arange(k_lo, k_hi + 1)
    lp = np.longdouble(math.log(p)) if p > 0 else np.longdouble("-inf")
    lq = np.longdouble(math.log1p(-p)) if p < 1 else np.longdouble("-inf")
    out = lf[n] - lf[i] - lf[n - i]
    out = out + i.astype(np.longdouble) * lp + (n - i).astype(np.longdouble) * lq
    return out


def _logsumexp_ld(lp: np.ndarray) -> np.longdouble:
    m = lp.max()
    if not np.isfinite(m):
        return np.longdouble("-inf")
    return m + np.log(np.exp(lp - m).sum())


def log_binomial_tail(k: int, n: int, p: float) -> float:
    """log10 of ``P(K >= k)`` for ``K ~ Binomial(n, p)``.

    Parameters
    ----------
    k : int
        Count threshold, ``0 <= k <= n + 1``.  ``k = n + 1`` is allowed
        and yields an empty tail (-inf).
    n : int
        Number of trials, ``n >= 0``.
    p : float
        Success probability in ``[0, 1]``.

    Returns
    -------
    float
        ``log10 P(K >= k)``; ``0.0`` for ``k <= 0`` and ``-inf`` for an
        empty tail.  Nonincreasing in ``k``.
    """
    if not 0 <= k <= n + 1:
        raise ValueError(f"k={k} outside [0, {n + 1}]")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if k <= 0:
        return 0.0
    if k == n + 1:
        return -math.inf
    if p == 0.0:
        return -math.inf  # k >= 1 but all mass at 0
    if p == 1.0:
        return 0.0  # all mass at n >= k
    mode = int(p * (n + 1))
    if k > mode:
        # Terms decrease over the summation range: factor out the first.
        lp = _log_pmf_range(k, n, n, p)
        total = lp[0] + np.log1p(np.exp(lp[1:] - lp[0]).sum())
    else:
        # Tail is >= ~1/2; compute the complement, which is small enough
        # that 1 - cdf loses no relative precision.
        if k == 0:
            return 0.0
        lp = _log_pmf_range(0, k - 1, n, p)
        cdf = np.exp(_logsumexp_ld(lp))
        total = np.log1p(-cdf)
    return float(total / np.longdouble(_LN10))


@lru_cache(maxsize=64)
def log_binomial_tail_table(n: int, p: float) -> np.ndarray:
    """log10 tail ``P(K >= k)`` for all ``k = 0..n+1`` (read-only array).

    One suffix log-sum pass per ``(n, p)``; the detector indexes this
    table instead of recomputing the tail per candidate.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    table = np.empty(n + 2)
    table[n + 1] = -np.inf
    if p == 0.0:
        table[1:] = -np.inf
        table[0] = 0.0
    elif p == 1.0:
        table[: n + 1] = 0.0
    else:
        lp = _log_pmf_range(0, n, n, p)
        suffix = np.logaddexp.accumulate(lp[::-1])[::-1]
        table[: n + 1] = np.minimum(suffix / np.longdouble(_LN10), 0.0).astype(float)
        table[0] = 0.0
    table.setflags(write=False)
    return table


def log_nfa(k: int, n: int, p: float, n_tests: float) -> float:
    """log10 of the number-of-false-alarms score ``n_tests * P(K >= k)``."""
    if n_tests < 0:
        raise ValueError("n_tests must be >= 0")
    if n_tests == 0:
        return -math.inf
    return math.log10(n_tests) + log_binomial_tail(k, n, p)


def nfa(k: int, n: int, p: float, n_tests: float) -> float:
    """Number of false alarms ``n_tests * P(K >= k)``, via log space.

    The linear value may underflow to 0.0 for extreme tails; for
    threshold comparisons use :func:`log_nfa`.
    """
    lg = log_nfa(k, n, p, n_tests)
    if lg == -math.inf:
        return 0.0
    return 10.0**lg


def n_tests(m_white: int, n_widths: int) -> float:
    """Sparse-sampling test count: ``n_widths * m(m-1)/2`` white-pixel pairs."""
    if m_white < 0:
        raise ValueError("m_white must be >= 0")
    if m_white < 2:
        return 0.0
    return n_widths * (m_white * (m_white - 1)) / 2.0
