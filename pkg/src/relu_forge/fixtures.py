"""Target functions with known moduli: a small zoo plus the bump and
sign-patch families used as hard cases."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approximator import TargetFunction
from .errors import ArgumentError
from .fnn_core import CpwlFunction
from .modulus import ModulusOfContinuity


@dataclass(frozen=True)
class BumpSpec:
    center: tuple
    side: float
    alpha: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not self.side > 0:
            raise ArgumentError("side length must be positive")
        if not (0 < self.alpha <= 1):
            raise ArgumentError("alpha must be in (0, 1]")
        h = self.side / 2
        if np.any(c - h < -1e-15) or np.any(c + h > 1 + 1e-15):
            raise ArgumentError("bump cube must lie inside the unit cube")

    @property
    def peak(self) -> float:
        return (self.side / 2) ** self.alpha / 2


def _bump_values(X, center, side, peak):
    # linear along each ray from the centre, reaching 0 on the cube boundary
    r = np.max(np.abs(X - center), axis=1)
    return peak * np.maximum(1.0 - 2.0 * r / side, 0.0)


def bump(spec: BumpSpec) -> TargetFunction:
    c = np.asarray(spec.center)
    d = c.size

    def f(X):
        return _bump_values(X, c, spec.side, spec.peak)

    return TargetFunction(d, f, ModulusOfContinuity.holder(1.0, spec.alpha), f"bump(alpha={spec.alpha})")


def sign_patch_function(K: int, d: int, alpha: float, signs) -> TargetFunction:
    """Sum of signed bumps on the K^d cubes [(beta-1)/K, beta/K], beta in {1..K}^d.

    ``signs`` is an array of shape (K,)*d (index beta-1) or a callable on
    1-based index tuples.
    """
    K, d = int(K), int(d)
    if callable(signs):
        import itertools
        table = np.zeros((K,) * d)
        for beta in itertools.product(range(1, K + 1), repeat=d):
            table[tuple(b - 1 for b in beta)] = signs(beta)
    else:
        table = np.asarray(signs, dtype=np.float64).reshape((K,) * d)
    if not np.isin(table, (-1.0, 1.0)).all():
        raise ArgumentError("signs must be +1 or -1")
    side = 1.0 / K
    peak = (side / 2) ** alpha / 2

    def f(X):
        idx = np.clip(np.floor(X * K), 0, K - 1).astype(int)
        centers = (idx + 0.5) / K
        r = np.max(np.abs(X - centers), axis=1)
        return table[tuple(idx.T)] * peak * np.maximum(1.0 - 2.0 * r / side, 0.0)

    return TargetFunction(d, f, ModulusOfContinuity.holder(1.0, alpha), f"sign_patch(K={K},d={d})")


def random_cpwl(seed: int = 0, n_breaks: int = 12) -> CpwlFunction:
    rng = np.random.default_rng(seed)
    x = np.concatenate([[0.0], np.sort(rng.uniform(0.02, 0.98, n_breaks - 2)), [1.0]])
    y = rng.uniform(-1.0, 1.0, n_breaks)
    return CpwlFunction(x, y)


ZOO_NAMES = ("abs", "holder_sqrt", "const", "linear", "cpwl")


def zoo(name: str, d: int | None = None, seed: int = 0, value: float = 1.0) -> TargetFunction:
    """Named fixtures with exact moduli.

    abs          |x - 1/2| on [0,1]                       omega(r) = r
    holder_sqrt  |x1 - x2|^(1/2) on [0,1]^2               omega(r) = 2^(1/4) r^(1/2)
    const        constant ``value``                       omega = 0
    linear       mean of the coordinates                  omega(r) = r / sqrt(d)
    cpwl         seeded random piecewise-linear on [0,1]  omega(r) = max|slope| r
    """
    if name == "abs":
        return TargetFunction(1, lambda X: np.abs(X[:, 0] - 0.5), ModulusOfContinuity.holder(1.0, 1.0), "abs")
    if name == "holder_sqrt":
        return TargetFunction(2, lambda X: np.sqrt(np.abs(X[:, 0] - X[:, 1])),
                              ModulusOfContinuity.holder(2 ** 0.25, 0.5), "holder_sqrt")
    if name == "const":
        dd = d or 1
        return TargetFunction(dd, lambda X: np.full(X.shape[0], float(value)), ModulusOfContinuity.zero(), "const")
    if name == "linear":
        dd = d or 1
        return TargetFunction(dd, lambda X: X.mean(axis=1), ModulusOfContinuity.holder(1 / math.sqrt(dd), 1.0), "linear")
    if name == "cpwl":
        g = random_cpwl(seed)
        lam = float(np.max(np.abs(g.slopes())))
        return TargetFunction(1, lambda X: g(X[:, 0]), ModulusOfContinuity.holder(lam, 1.0), f"cpwl(seed={seed})")
    raise KeyError(f"unknown fixture {name!r}; available: {', '.join(ZOO_NAMES)}")
