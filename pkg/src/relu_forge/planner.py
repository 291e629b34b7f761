"""Per-iteration parallel cost model and (N, L) selection.

All asymptotic constants are fixed to 1, so the formulas below are explicit
non-asymptotic surrogates of the scaling laws they stand for.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import ArgumentError

CASE1_THRESHOLD = 8
CSV_HEADER = ["epsilon", "alpha", "d", "p", "regime", "N_opt", "L_opt", "cost"]


def cost(N: float, L: float, p: float) -> float:
    """N^2 L / p for p <= N;  L (N^2/p + ln(p/N)) for N < p <= N^2;
    L (1 + ln N) for p > N^2."""
    if min(N, L, p) < 1:
        raise ArgumentError("N, L, p must be >= 1")
    if p <= N:
        return N * N * L / p
    if p <= N * N:
        return L * (N * N / p + math.log(p / N))
    return L * (1.0 + math.log(N))


@dataclass(frozen=True)
class CostQuery:
    epsilon: float
    alpha: float
    d: int
    p: float

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ArgumentError("epsilon must lie in (0, 1)")
        if not (0 < self.alpha <= 1):
            raise ArgumentError("alpha must lie in (0, 1]")
        if int(self.d) != self.d or self.d < 1:
            raise ArgumentError("d must be a positive integer")
        if not self.p >= 1:
            raise ArgumentError("p must be >= 1")

    @property
    def size(self) -> float:
        """Required product N*L = epsilon^(-d/(2 alpha))."""
        return self.epsilon ** (-self.d / (2.0 * self.alpha))

    @property
    def size_ceil(self) -> int:
        return ceil_tol(self.size)


@dataclass(frozen=True)
class CostPlan:
    N_opt: int
    L_opt: int
    regime: str
    predicted_cost: float


def ceil_tol(x: float, rel: float = 1e-12) -> int:
    """Ceiling that ignores floating noise just above an integer."""
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def scan_case22(q: CostQuery) -> list:
    """(N, L, cost) for every integer N in [ceil(sqrt p), min(ceil p, ceil E)]."""
    E = q.size_ceil
    lo = ceil_tol(math.sqrt(q.p))
    hi = min(ceil_tol(q.p), E)
    out = []
    for N in range(lo, hi + 1):
        L = max(1, -(-E // N))
        out.append((N, L, cost(N, L, q.p)))
    return out


def plan(q: CostQuery, threshold: float = CASE1_THRESHOLD) -> CostPlan:
    E = q.size_ceil
    if q.p <= threshold:
        N = int(q.d)
        L = max(1, -(-E // N))
        return CostPlan(N, L, "case1", cost(N, L, q.p))
    if math.sqrt(q.p) > q.size:
        return CostPlan(E, 1, "case2.1", cost(E, 1, q.p))
    rows = scan_case22(q)
    best = min(rows, key=lambda r: (r[2], r[0]))
    return CostPlan(best[0], best[1], "case2.2", best[2])


def plan_csv(q: CostQuery, result: CostPlan) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerow([repr(float(q.epsilon)), repr(float(q.alpha)), int(q.d), repr(float(q.p)),
                result.regime, result.N_opt, result.L_opt, repr(float(result.predicted_cost))])
    return buf.getvalue()
