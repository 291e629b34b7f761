"""Moduli of continuity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True, eq=False)
class ModulusOfContinuity:
    """Nondecreasing, subadditive bound r -> omega(r) with omega(0) = 0.

    kinds:
      ``holder``     omega(r) = lam * r**alpha
      ``tabulated``  piecewise-linear through (radii, values); beyond the last
                     radius it grows linearly through the origin, which keeps
                     it an upper bound for concave moduli
      ``callable``   arbitrary user function
    ``rigorous`` is False for empirically estimated moduli; certificates built
    on them are marked accordingly.
    """

    kind: str
    lam: float = 1.0
    alpha: float = 1.0
    radii: np.ndarray | None = None
    values: np.ndarray | None = None
    func: Callable | None = None
    radius: float | None = None
    rigorous: bool = True

    @classmethod
    def holder(cls, lam: float, alpha: float, radius=None) -> "ModulusOfContinuity":
        if lam < 0 or not (0 < alpha <= 1):
            raise ArgumentError("Hölder modulus needs lam >= 0 and alpha in (0, 1]")
        return cls("holder", lam=float(lam), alpha=float(alpha), radius=radius)

    @classmethod
    def tabulated(cls, radii, values, radius=None, rigorous=True) -> "ModulusOfContinuity":
        r = np.asarray(radii, dtype=np.float64).reshape(-1)
        v = np.asarray(values, dtype=np.float64).reshape(-1)
        if r.size != v.size or r.size == 0:
            raise ArgumentError("radii and values must be nonempty and of equal length")
        if r[0] != 0.0:
            r, v = np.concatenate([[0.0], r]), np.concatenate([[0.0], v])
        if v[0] != 0.0:
            raise ArgumentError("omega(0) must be 0")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(v) < 0):
            raise ArgumentError("tabulated modulus must be nondecreasing in strictly increasing radii")
        return cls("tabulated", radii=r, values=v, radius=radius, rigorous=rigorous)

    @classmethod
    def from_callable(cls, func, radius=None, rigorous=True) -> "ModulusOfContinuity":
        return cls("callable", func=func, radius=radius, rigorous=rigorous)

    @classmethod
    def zero(cls) -> "ModulusOfContinuity":
        return cls("holder", lam=0.0, alpha=1.0)

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "holder":
            out = self.lam * np.power(np.maximum(r, 0.0), self.alpha)
        elif self.kind == "tabulated":
            rr, vv = self.radii, self.values
            out = np.interp(r, rr, vv)
            if rr.size > 1:
                out = np.where(r > rr[-1], vv[-1] * r / rr[-1], out)
        else:
            out = np.asarray(self.func(r), dtype=np.float64)
        return float(out) if out.ndim == 0 else out

    def is_zero(self) -> bool:
        if self.kind == "holder":
            return self.lam == 0.0
        if self.kind == "tabulated":
            return bool(np.all(self.values == 0))
        return False

    def scaled(self, c: float) -> "ModulusOfContinuity":
        """Modulus r -> omega(c * r)."""
        c = float(c)
        if self.kind == "holder":
            return ModulusOfContinuity.holder(self.lam * c ** self.alpha, self.alpha)
        if self.kind == "tabulated":
            return ModulusOfContinuity.tabulated(self.radii / c, self.values, rigorous=self.rigorous)
        f = self.func
        return ModulusOfContinuity.from_callable(lambda r: f(c * np.asarray(r)), rigorous=self.rigorous)

    def largest_radius_below(self, target: float, hi: float = 1.0, iters: int = 200) -> float:
        """Largest r in [0, hi] with omega(r) <= target (bisection)."""
        if self(hi) <= target:
            return hi
        lo = 0.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if self(mid) <= target:
                lo = mid
            else:
                hi = mid
        return lo

    def describe(self) -> str:
        if self.kind == "holder":
            return f"holder(lam={self.lam!r}, alpha={self.alpha!r})"
        if self.kind == "tabulated":
            return f"tabulated({self.radii.size} nodes)"
        return "callable"


def empirical_modulus(points, values, max_pairs: int = 200_000, seed: int = 0) -> ModulusOfContinuity:
    """Concave majorant of observed (distance, |difference|) pairs.

    Only a lower estimate of the true modulus; flagged non-rigorous.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    n = X.shape[0]
    if n < 2:
        raise ArgumentError("need at least two points")
    if n * (n - 1) // 2 <= max_pairs:
        i, j = np.triu_indices(n, 1)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, max_pairs)
        j = rng.integers(0, n, max_pairs)
        keep = i != j
        i, j = i[keep], j[keep]
    r = np.linalg.norm(X[i] - X[j], axis=1)
    dv = np.abs(v[i] - v[j])
    keep = r > 0
    r, dv = r[keep], dv[keep]
    order = np.argsort(r)
    r, dv = r[order], np.maximum.accumulate(dv[order])
    # upper concave hull through the origin
    hull = [(0.0, 0.0)]
    for p in zip(r, dv):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    hr = np.array([h[0] for h in hull])
    hv = np.maximum.accumulate(np.array([h[1] for h in hull]))
    uniq = np.concatenate([[True], np.diff(hr) > 0])
    return ModulusOfContinuity.tabulated(hr[uniq], hv[uniq], rigorous=False)
