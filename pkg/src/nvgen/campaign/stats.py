"""Rates, binomial confidence intervals and the Wilcoxon rank-sum test."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

EXACT_LIMIT = 12  # exact enumeration when |A| + |B| <= this


class DivisionUndefined(ZeroDivisionError):
    pass


class BadLevel(ValueError):
    pass


class EmptySample(ValueError):
    pass


def compute_nvr(neutral: int, compiled: int) -> float:
    """Neutral variants divided by variants that compile."""
    if not 0 <= neutral <= compiled:
        raise ValueError(f"need 0 <= neutral ({neutral}) <= compiled ({compiled})")
    if compiled == 0:
        raise DivisionUndefined("no variant compiled")
    return neutral / compiled


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    half_width: float
    estimate: float

    def percent_str(self, digits: int = 2) -> str:
        return f"{100 * self.estimate:.{digits}f}% ± {100 * self.half_width:.{digits}f}"


def _z(level: float) -> float:
    if not 0 < level < 1:
        raise BadLevel(f"confidence level must lie in (0, 1), got {level}")
    return NormalDist().inv_cdf(0.5 + level / 2)


def binomial_ci(successes: int, n: int, level: float = 0.95, method: str = "wald") -> Interval:
    """Normal-approximation (Wald) interval, or Wilson score interval with ``method="wilson"``."""
    if n < 1 or not 0 <= successes <= n:
        raise ValueError(f"need n >= 1 and 0 <= successes <= n, got {successes}/{n}")
    z = _z(level)
    p = successes / n
    if method == "wald":
        hw = z * math.sqrt(p * (1 - p) / n)
        return Interval(p - hw, p + hw, hw, p)
    if method == "wilson":
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        hw = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        return Interval(centre - hw, centre + hw, hw, p)
    raise ValueError(f"unknown interval method {method!r}")


# ============================================================
# WILCOXON RANK SUM
# ============================================================


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankSumResult:
    statistic: float  # rank sum of sample A
    p_value: float
    method: str  # exact | normal


def _prepare(a: Sequence[float], b: Sequence[float]):
    if not a or not b:
        raise EmptySample("both samples must be nonempty")
    pooled = list(a) + list(b)
    ranks = midranks(pooled)
    w = sum(ranks[: len(a)])
    return pooled, ranks, w


def rank_sum_exact(a: Sequence[float], b: Sequence[float]) -> RankSumResult:
    """Two-sided p by enumerating every assignment of the pooled midranks to sample A."""
    _pooled, ranks, w = _prepare(a, b)
    n1, n = len(a), len(ranks)
    mean = n1 * (n + 1) / 2
    observed = abs(w - mean)
    extreme = total = 0
    for combo in itertools.combinations(range(n), n1):
        total += 1
        s = sum(ranks[i] for i in combo)
        if abs(s - mean) >= observed - 1e-9:
            extreme += 1
    return RankSumResult(w, extreme / total, "exact")


def rank_sum_normal(a: Sequence[float], b: Sequence[float], continuity: bool = True) -> RankSumResult:
    """Two-sided p from the normal approximation with tie-corrected variance."""
    pooled, _ranks, w = _prepare(a, b)
    n1, n2 = len(a), len(b)
    n = n1 + n2
    mean = n1 * (n + 1) / 2
    ties = {}
    for v in pooled:
        ties[v] = ties.get(v, 0) + 1
    tie_term = sum(t ** 3 - t for t in ties.values())
    var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return RankSumResult(w, 1.0, "normal")
    dev = abs(w - mean)
    if continuity:
        dev = max(dev - 0.5, 0.0)
    z = dev / math.sqrt(var)
    return RankSumResult(w, min(1.0, 2 * (1 - NormalDist().cdf(z))), "normal")


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> RankSumResult:
    """Exact test for small pooled samples, normal approximation otherwise."""
    if len(a) + len(b) <= EXACT_LIMIT and a and b:
        return rank_sum_exact(a, b)
    return rank_sum_normal(a, b)
