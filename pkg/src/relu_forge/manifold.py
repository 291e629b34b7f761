"""Approximation near low-dimensional manifolds via random projections.

Points of [0,1]^d are mapped by a scaled orthoprojector A into d_low
dimensions, the target is transported to the projected cloud (choosing a
lexicographic-minimum preimage when several cloud points land together),
extended to a cube, approximated there, and the projection is folded into
the network's first layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .approximator import TargetFunction
from .domain_ext import SampledDomain, approximate_on_domain, mcshane_extend
from .errors import ArgumentError, PreconditionError
from .fnn_core import ReluNetwork, evaluate_scalar, precompose_affine
from .modulus import ModulusOfContinuity


@dataclass(frozen=True, eq=False)
class ProjectionMap:
    A: np.ndarray
    d: int
    d_low: int
    delta: float
    seed: int | None
    retries: int = 10
    check_pairs: int = 2000
    min_fraction: float = 1.0

    def __call__(self, X):
        return np.asarray(X, dtype=np.float64).reshape(-1, self.d) @ self.A.T

    def gram_error(self) -> float:
        return float(np.max(np.abs(self.A @ self.A.T - (self.d / self.d_low) * np.eye(self.d_low))))


def random_orthoprojector(d: int, d_low: int, delta: float, seed: int = 0, **policy) -> ProjectionMap:
    """A = sqrt(d/d_low) * Phi where Phi has orthonormal rows obtained by QR
    of a seeded Gaussian matrix."""
    d, d_low = int(d), int(d_low)
    if d_low < 1 or d < 1:
        raise ArgumentError("dimensions must be positive")
    if d_low > d:
        raise ArgumentError(f"projected dimension {d_low} exceeds ambient dimension {d}; "
                            "use identity_projector for the no-reduction case")
    if not (0 < delta < 1):
        raise ArgumentError("delta must lie in (0, 1)")
    G = np.random.default_rng(seed).standard_normal((d, d_low))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diag(R))      # unique orientation
    A = math.sqrt(d / d_low) * Q.T
    A.setflags(write=False)
    return ProjectionMap(A, d, d_low, float(delta), seed, **policy)


def identity_projector(d: int, delta: float = 0.5) -> ProjectionMap:
    A = np.eye(int(d))
    A.setflags(write=False)
    return ProjectionMap(A, int(d), int(d), float(delta), None)


def suggested_dimension(d: int, d_manifold: int, delta: float) -> int:
    """d_manifold * ln(d/delta) / delta^2 with unit constant, capped at d."""
    return int(min(d, max(1, math.ceil(d_manifold * math.log(d / delta) / delta ** 2))))


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    epsilon: float
    tags: np.ndarray | None = None
    base_points: np.ndarray | None = None

    def __post_init__(self):
        P = np.asarray(self.points, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] == 0:
            raise ArgumentError("cloud must be a nonempty (n, d) array")
        if P.min() < 0 or P.max() > 1:
            raise ArgumentError("cloud points must lie in [0, 1]^d")
        if not (0 <= self.epsilon < 1):
            raise ArgumentError("epsilon must lie in [0, 1)")
        object.__setattr__(self, "points", P)
        if self.tags is not None:
            object.__setattr__(self, "tags", np.asarray(self.tags).reshape(-1))

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DistortionStats:
    min_ratio: float
    max_ratio: float
    fraction_within: float
    pairs: int
    seed: int


def distortion_check(proj: ProjectionMap, cloud: PointCloud, pairs: int = 2000, seed: int = 0) -> DistortionStats:
    """Ratios |A x1 - A x2| / |x1 - x2| over seeded random distinct pairs."""
    P = cloud.points
    if np.ptp(P, axis=0).max() == 0:
        raise ArgumentError("degenerate cloud: all points identical")
    if pairs < 1:
        raise ArgumentError("pairs must be positive")
    n = P.shape[0]
    rng = np.random.default_rng(seed)
    if n * (n - 1) // 2 <= pairs:
        i, j = np.triu_indices(n, 1)
    else:
        i = rng.integers(0, n, 2 * pairs)
        j = rng.integers(0, n, 2 * pairs)
    diff = P[i] - P[j]
    nrm = np.linalg.norm(diff, axis=1)
    keep = nrm > 0
    diff, nrm = diff[keep][:pairs], nrm[keep][:pairs]
    ratio = np.linalg.norm(diff @ proj.A.T, axis=1) / nrm
    within = np.mean((ratio >= 1 - proj.delta) & (ratio <= 1 + proj.delta))
    return DistortionStats(float(ratio.min()), float(ratio.max()), float(within), int(ratio.size), seed)


def accept_projector(d: int, d_low: int, delta: float, cloud: PointCloud, seed: int = 0,
                     retries: int = 10, pairs: int = 2000, min_fraction: float = 1.0):
    """Draw projectors with seeds seed, seed+1, ... until the empirical
    distortion fraction reaches ``min_fraction``; returns (proj, stats)."""
    best = None
    for k in range(retries):
        proj = random_orthoprojector(d, d_low, delta, seed + k, retries=retries,
                                     check_pairs=pairs, min_fraction=min_fraction)
        st = distortion_check(proj, cloud, pairs, seed)
        if best is None or st.fraction_within > best[1].fraction_within:
            best = (proj, st)
        if st.fraction_within >= min_fraction:
            return proj, st
    return best


def sl_select(candidates) -> np.ndarray:
    """Lexicographic minimum (first coordinate, then second, ...)."""
    C = np.asarray(candidates, dtype=np.float64)
    if C.size == 0:
        raise ArgumentError("empty candidate set")
    C = C.reshape(C.shape[0], -1) if C.ndim > 1 else C.reshape(1, -1)
    order = np.lexsort(C.T[::-1])
    return C[order[0]].copy()


def mesh_size(points) -> float:
    """Largest nearest-neighbour distance in the set."""
    P = np.asarray(points, dtype=np.float64)
    n = P.shape[0]
    if n < 2:
        return 0.0
    best = np.full(n, np.inf)
    chunk = max(1, 4_000_000 // (n * P.shape[1]))
    for s in range(0, n, chunk):
        D = np.sqrt(((P[s:s + chunk, None, :] - P[None, :, :]) ** 2).sum(-1))
        D[np.arange(D.shape[0]), np.arange(s, s + D.shape[0])] = np.inf
        best[s:s + chunk] = D.min(axis=1)
    return float(best.max())


@dataclass(frozen=True, eq=False)
class ManifoldApproximant:
    network: ReluNetwork
    projector: ProjectionMap
    bound: float
    bound_nominal: float
    R: float
    measured_sup: float
    passed: bool
    report: dict = field(default_factory=dict)

    def __call__(self, x):
        return evaluate_scalar(self.network, np.asarray(x, dtype=np.float64).reshape(-1, self.network.input_dim))


def manifold_bound(omega_f: ModulusOfContinuity, eps: float, delta: float, d: int, d_low: int,
                   N: int, L: int, R: float | None = None) -> float:
    """2 w((2 eps/(1-delta)) sqrt(d/d_low) + 2 eps)
       + 19 sqrt(d) w((2R/(1-delta)) N^{-2/d_low} L^{-2/d_low}),  R = sqrt(d/d_low) by default."""
    if R is None:
        R = math.sqrt(d / d_low)
    first = 2 * float(omega_f((2 * eps / (1 - delta)) * math.sqrt(d / d_low) + 2 * eps))
    rate = float(N) ** (-2.0 / d_low) * float(L) ** (-2.0 / d_low)
    return first + 19 * math.sqrt(d) * float(omega_f((2 * R / (1 - delta)) * rate))


def build_manifold_approximant(f: TargetFunction, cloud: PointCloud, proj: ProjectionMap, N: int, L: int,
                               tol: float | None = None, mode: str = "cloud",
                               uniform: bool = True) -> ManifoldApproximant:
    """Network phi = phi_low o A approximating f on the cloud.

    mode ``cloud``: preimages are searched among all cloud points;
    mode ``base``: among ``cloud.base_points`` (points on the manifold itself).
    """
    if f.dim != cloud.dim or proj.d != cloud.dim:
        raise ArgumentError("dimension mismatch between target, cloud and projector")
    if uniform and proj.d_low > 4:
        raise ArgumentError("uniform lift supports projected dimension <= 4")
    d, k, delta, eps = proj.d, proj.d_low, proj.delta, cloud.epsilon
    X = cloud.points
    Y = proj(X)
    if mode == "cloud":
        pool = X
    elif mode == "base":
        if cloud.base_points is None:
            raise ArgumentError("mode 'base' needs cloud.base_points")
        pool = np.asarray(cloud.base_points, dtype=np.float64)
    else:
        raise ArgumentError(f"unknown selection mode {mode!r}")
    pool_y = proj(pool)
    if tol is None:
        tol = 1e-8 + (1 + delta) * mesh_size(pool)

    # transported target on unique projected points
    uY, first = np.unique(Y, axis=0, return_index=True)
    vals = np.empty(uY.shape[0])
    for q, y in enumerate(uY):
        hit = np.linalg.norm(pool_y - y, axis=1) <= tol
        if not hit.any():
            raise PreconditionError(f"no preimage within tolerance {tol!r} for projected point {y.tolist()}")
        vals[q] = f(sl_select(pool[hit])[None, :])[0]

    nominal_R = math.sqrt(d / k)
    R = max(nominal_R, float(np.max(np.abs(uY))))
    omega_low = ModulusOfContinuity.from_callable(lambda r: f.modulus(np.asarray(r) / (1 - delta)),
                                                  rigorous=f.modulus.rigorous)
    if f.modulus.kind == "holder":
        omega_low = f.modulus.scaled(1.0 / (1 - delta))
    Delta = 2 * eps * math.sqrt(d / k) + 2 * eps * (1 - delta)
    dom = SampledDomain(uY, vals, R)
    low = approximate_on_domain(dom, omega_low, N, L, Delta=Delta, uniform=uniform)
    net = precompose_affine(low.network, proj.A)
    net = net.with_metadata(construction="manifold_approximant", reference="projected manifold pipeline",
                            projector=";".join(float(v).hex() for v in proj.A.ravel()),
                            projector_shape=f"{k}x{d}")
    err = float(np.max(np.abs(evaluate_scalar(net, X) - f(X))))
    nominal = manifold_bound(f.modulus, eps, delta, d, k, N, L)
    bound = manifold_bound(f.modulus, eps, delta, d, k, N, L, R)
    report = {"measured_sup": err, "bound": bound, "bound_nominal": nominal, "R": R,
              "nominal_R": nominal_R, "tol": tol, "Delta": Delta, "K": low.inner.K,
              "mode": mode, "points": X.shape[0]}
    return ManifoldApproximant(net, proj, bound, nominal, R, err, err <= bound, report)


def helix_cloud(d: int = 10, n: int = 2000, eps: float = 0.01, turns: float = 1.0, seed: int = 0) -> PointCloud:
    """Helix through [0,1]^d (one-dimensional base manifold) thickened by eps.

    The curve winds in the first two coordinates and climbs linearly along
    the remaining ones; noise vectors have norm at most eps.
    """
    rng = np.random.default_rng(seed)
    t = np.sort(rng.random(n))
    base = np.empty((n, d))
    base[:, 0] = 0.5 + 0.3 * np.cos(2 * np.pi * turns * t)
    base[:, 1] = 0.5 + 0.3 * np.sin(2 * np.pi * turns * t)
    ramp = 0.2 + 0.6 * t
    for c in range(2, d):
        base[:, c] = ramp if c % 2 == 0 else 1.0 - ramp
    noise = rng.standard_normal((n, d))
    noise *= (eps * rng.random(n) / np.linalg.norm(noise, axis=1))[:, None]
    return PointCloud(np.clip(base + noise, 0, 1), eps, base_points=base)
