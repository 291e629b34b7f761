"""Extension of functions known on scattered points and approximation on
irregular domains.

The extension is the McShane-type envelope
    g(x) = max_z [ f(z) - omega(|z - x| + Delta) ],
which never exceeds f on the samples and inherits the modulus omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .approximator import Approximant, TargetFunction, build_approximant, rate_argument
from .errors import ArgumentError, PreconditionError
from .fnn_core import evaluate_scalar, precompose_affine
from .modulus import ModulusOfContinuity, empirical_modulus

__all__ = [
    "ModulusOfContinuity", "empirical_modulus", "SampledDomain", "check_pairs",
    "mcshane_extend", "approximate_on_domain", "DomainApproximant", "arc_domain",
    "read_domain_csv",
]

PAIR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SampledDomain:
    points: np.ndarray
    values: np.ndarray
    R: float | None = None

    def __post_init__(self):
        P = np.asarray(self.points, dtype=np.float64)
        if P.ndim == 1:
            P = P[:, None]
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if P.shape[0] != v.size or v.size == 0:
            raise ArgumentError("points and values must be nonempty and of equal length")
        if not (np.isfinite(P).all() and np.isfinite(v).all()):
            raise ArgumentError("domain data must be finite")
        if np.unique(P, axis=0).shape[0] != P.shape[0]:
            raise ArgumentError("domain points must be distinct")
        R = float(np.max(np.abs(P))) if self.R is None else float(self.R)
        if np.max(np.abs(P)) > R * (1 + 1e-12):
            raise ArgumentError("points must lie in [-R, R]^d")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "R", R)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _pairwise(A, B):
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.sqrt(np.maximum(d2, 0.0))


def _exact_dist(a, b):
    return float(np.linalg.norm(a - b))


def check_pairs(dom: SampledDomain, omega: ModulusOfContinuity, Delta: float, chunk: int = 2048):
    """Raise PreconditionError naming the first pair with
    |f(x1) - f(x2)| > omega(|x1 - x2| + Delta)."""
    P, v = dom.points, dom.values
    n = v.size
    for s in range(0, n, chunk):
        D = _pairwise(P[s:s + chunk], P)
        gap = np.abs(v[s:s + chunk, None] - v[None, :]) - omega(D + Delta)
        bad = np.argwhere(gap > PAIR_TOL * (1 + np.abs(v[s:s + chunk, None]) + np.abs(v[None, :])))
        for i, j in bad:
            i = int(i) + s
            j = int(j)
            r = _exact_dist(P[i], P[j])
            lhs = abs(v[i] - v[j])
            rhs = float(omega(r + Delta))
            if lhs > rhs + PAIR_TOL * (1 + abs(v[i]) + abs(v[j])):
                raise PreconditionError(
                    f"pair ({i}, {j}) violates the continuity condition: "
                    f"|f(x_{i}) - f(x_{j})| = {lhs!r} > omega(|x_{i} - x_{j}| + Delta) = {rhs!r}")


def mcshane_extend(dom: SampledDomain, omega: ModulusOfContinuity, Delta: float = 0.0,
                   check: bool = True) -> Callable:
    """Return g: (n, d) array -> (n,) values of the envelope extension."""
    if Delta < 0:
        raise ArgumentError("Delta must be nonnegative")
    if check:
        check_pairs(dom, omega, Delta)
    P = dom.points.copy()
    v = dom.values.copy()
    d = P.shape[1]

    def g(x):
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim <= 1 and X.size == d
        X = X.reshape(-1, d)
        out = np.empty(X.shape[0])
        chunk = max(1, 4_000_000 // (P.shape[0] * d))
        for s in range(0, X.shape[0], chunk):
            D = np.sqrt(((X[s:s + chunk, None, :] - P[None, :, :]) ** 2).sum(-1))
            out[s:s + chunk] = np.max(v[None, :] - omega(D + Delta), axis=1)
        return float(out[0]) if single else out

    return g


@dataclass(frozen=True, eq=False)
class DomainApproximant:
    """Network on [-R, R]^d together with the cube-level approximant."""

    network: object
    inner: Approximant
    R: float
    bound: float
    rigorous: bool

    def __call__(self, x):
        return evaluate_scalar(self.network, np.asarray(x, dtype=np.float64).reshape(-1, self.network.input_dim))

    def to_unit(self, x):
        return np.asarray(x, dtype=np.float64) / (2 * self.R) + 0.5

    def from_unit(self, u):
        return 2 * self.R * np.asarray(u, dtype=np.float64) - self.R

    def sup_error(self, points, values) -> float:
        return float(np.max(np.abs(self(points) - np.asarray(values).reshape(-1))))


def approximate_on_domain(dom: SampledDomain, omega: ModulusOfContinuity, N: int, L: int,
                          f: Callable | None = None, Delta: float = 0.0, uniform: bool = True,
                          check: bool = True) -> DomainApproximant:
    """Approximate a function known on ``dom`` (or a callable ``f`` already
    defined on [-R, R]^d) by a network on [-R, R]^d.

    The cube [-R, R]^d is mapped affinely onto [0, 1]^d, the extended target
    is approximated there in the sup norm, and the affine map is folded into
    the first layer.
    """
    d, R = dom.dim, dom.R
    if not R > 0:
        raise ArgumentError("R must be positive")
    g = f if f is not None else mcshane_extend(dom, omega, Delta, check=check)

    def unit_target(U):
        return np.asarray(g(2 * R * U - R), dtype=np.float64).reshape(-1)

    unit_modulus = omega.scaled(2 * R)
    inner = build_approximant(TargetFunction(d, unit_target, unit_modulus, "domain"), N, L,
                              math.inf, uniform)
    net = precompose_affine(inner.network, np.eye(d) / (2 * R), np.full(d, 0.5))
    net = net.with_metadata(construction="approximate_on_domain", reference="domain extension pipeline", R=repr(R))
    bound = 19 * math.sqrt(d) * float(omega(2 * R * rate_argument(N, L, d)))
    if Delta > 0:
        bound += float(omega(Delta))
    return DomainApproximant(net, inner, R, bound, omega.rigorous)


def arc_domain(n: int = 10_000, angle: float = math.pi / 2, start: float = 0.0) -> tuple:
    """Points on the unit circle arc [start, start + angle] with the polar
    angle as target; omega(r) = (pi/2) r holds for arcs of length <= pi."""
    if angle > math.pi:
        raise ArgumentError("arc must not exceed a half circle")
    t = start + angle * np.arange(n) / max(n - 1, 1)
    P = np.c_[np.cos(t), np.sin(t)]
    return SampledDomain(P, t, R=1.0), ModulusOfContinuity.holder(math.pi / 2, 1.0)


def read_domain_csv(path, R: float | None = None) -> SampledDomain:
    """Rows ``x1,...,xd,value`` (an optional non-numeric header is skipped)."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                from .errors import ParseError
                raise ParseError("non-numeric entry", f"{path}:{lineno}") from None
    if not rows or len({len(r) for r in rows}) != 1 or len(rows[0]) < 2:
        from .errors import ParseError
        raise ParseError("domain CSV needs rows x1,...,xd,value of equal length", str(path))
    A = np.array(rows)
    return SampledDomain(A[:, :-1], A[:, -1], R)
