"""Benjamini-Hochberg step-up procedure."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BhResult:
    alpha_hat: float
    j_max: int
    rejected: tuple  # indices into the input p-value list, ascending by (p, index)


def _check_q(q):
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")


def bh_step_up(pvalues, q: float, total=None, order_strict: bool = True) -> BhResult:
    """Step-up threshold over ``total`` hypotheses.

    Only the listed p-values are scanned; the remaining ``total - len(pvalues)``
    hypotheses are taken to have p = 1 and enter only through the
    denominator. ``j_max`` is the largest ``j`` with ``p_(j) < q j / total``
    (``<=`` when ``order_strict`` is false), ``alpha_hat = q j_max / total``
    and the rejected hypotheses are those with ``p < alpha_hat``.
    """
    _check_q(q)
    p = np.asarray(pvalues, dtype=float).ravel()
    m = p.size
    total = float(m if total is None else total)
    if total < m:
        raise ValueError(f"total ({total}) must be at least the number of p-values ({m})")
    if m == 0:
        return BhResult(0.0, 0, ())
    order = np.lexsort((np.arange(m), p))
    ps = p[order]
    j = np.arange(1, m + 1)
    crit = q * j / total
    ok = ps < crit if order_strict else ps <= crit
    hits = np.flatnonzero(ok)
    j_max = int(hits[-1]) + 1 if hits.size else 0
    alpha_hat = q * j_max / total if j_max else 0.0
    rejected = tuple(int(i) for i in order if p[i] < alpha_hat)
    return BhResult(alpha_hat, j_max, rejected)


def bh_threshold_sup_oracle(pvalues, q: float, total=None) -> float:
    """Supremum form of the BH threshold, by direct scan.

    Returns ``sup{a > 0 : a * total / #{p < a} <= q}`` (0 if the set is
    empty). The ratio is piecewise linear between consecutive p-values, so
    the supremum is attained on ``{q j / total} U {p_j}``. Meant for small
    inputs as a test oracle.
    """
    _check_q(q)
    p = [float(x) for x in pvalues]
    m = len(p)
    total = float(m if total is None else total)
    candidates = {q * j / total for j in range(int(total) + 1)} | set(p)
    best = 0.0
    for a in candidates:
        if a <= 0:
            continue
        count = sum(1 for x in p if x < a)
        if count and a <= q * count / total and a > best:
            best = a
    return best
