"""Approximation pipeline for continuous functions on the unit cube.

The network is   point_fit o index_map o (step nets per coordinate) + shift,
optionally followed by the median-of-three lift that removes the thin slabs
near cube boundaries where the step nets are unreliable.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .constructions import (
    SampleSequence,
    constant_net,
    point_fit_net,
    step_count,
    step_function_net,
)
from .errors import ArgumentError, CapabilityError, CapacityError, NumericDomainError
from .fnn_core import (
    CpwlFunction,
    ReluNetwork,
    affine_net,
    compose_serial,
    evaluate_scalar,
    gadget_mid3,
    postcompose_affine,
    precompose_affine,
    select_inputs,
    stack_parallel,
)
from .modulus import ModulusOfContinuity

DEFAULT_EVAL_CAP = 10 ** 6
LIFT_DIM_CAP = 4
CSV_HEADER = ["N", "L", "K", "delta", "norm", "measured_out", "bound_out",
              "measured_global", "bound_global", "pass"]


def eval_cap() -> int:
    env = os.environ.get("RELU_FORGE_EVAL_CAP")
    return int(env) if env else DEFAULT_EVAL_CAP


@dataclass(frozen=True, eq=False)
class TargetFunction:
    """Deterministic f: [0,1]^d -> R with a modulus of continuity."""

    dim: int
    eval: Callable
    modulus: ModulusOfContinuity
    label: str = "target"

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1 and x.shape[0] == self.dim
        X = x.reshape(-1, self.dim)
        out = np.asarray(self.eval(X), dtype=np.float64).reshape(-1)
        return float(out[0]) if single else out


# ---------------------------------------------------------------- partition

def _check_delta(K: int, delta: float):
    if K > 1 and not (0.0 < delta <= 1.0 / (3 * K)):
        raise ArgumentError(f"delta must lie in (0, 1/(3K)] = (0, {1.0 / (3 * K)}]")


@dataclass(frozen=True)
class Partition:
    """Cubes Q_beta = prod_i [beta_i/K, (beta_i+1)/K - delta*1{beta_i <= K-2}]."""

    K: int
    d: int
    delta: float

    def interval(self, k: int) -> tuple:
        hi = (k + 1) / self.K - (self.delta if k <= self.K - 2 else 0.0)
        return (k / self.K, hi)

    def intervals(self) -> list:
        return [self.interval(k) for k in range(self.K)]

    def cubes(self) -> Iterable:
        """Yield (beta, lower corner, upper corner)."""
        iv = self.intervals()
        for beta in itertools.product(range(self.K), repeat=self.d):
            lo = np.array([iv[b][0] for b in beta])
            hi = np.array([iv[b][1] for b in beta])
            yield beta, lo, hi

    def representative(self, beta) -> np.ndarray:
        return np.asarray(beta, dtype=np.float64) / self.K

    def cube_index(self, x) -> np.ndarray:
        """beta for points outside the trifling region."""
        X = np.asarray(x, dtype=np.float64).reshape(-1, self.d)
        return np.clip(np.floor(X * self.K), 0, self.K - 1).astype(int)


def partition(K: int, d: int, delta: float) -> Partition:
    K, d = int(K), int(d)
    if K < 1 or d < 1:
        raise ArgumentError("K and d must be positive")
    _check_delta(K, delta)
    return Partition(K, d, float(delta) if K > 1 else 0.0)


def in_trifling(x, K: int, delta: float, d: int | None = None):
    """True where some coordinate lies in an open gap (k/K - delta, k/K)."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim <= 1 and (d is None or X.size == d)
    X = X.reshape(-1, d if d is not None else (X.shape[-1] if X.ndim > 1 else X.size))
    if K <= 1:
        out = np.zeros(X.shape[0], dtype=bool)
    else:
        k0 = np.floor(X * K)
        hit = np.zeros(X.shape, dtype=bool)
        for k in (k0, k0 + 1):
            hit |= (k >= 1) & (k <= K - 1) & (X > k / K - delta) & (X < k / K)
        out = hit.any(axis=1)
    return bool(out[0]) if single else out


def trifling_measure_bound(K: int, d: int, delta: float) -> float:
    return K * d * delta if K > 1 else 0.0


# ------------------------------------------------------------ index map / g

def index_weights(K: int, d: int) -> np.ndarray:
    """Coefficients of beta -> 2K^d psi_1(beta) (an integer index)."""
    w = np.array([2.0 * K ** (d - i) for i in range(1, d)] + [1.0])
    return w


def index_map(K: int, d: int) -> ReluNetwork:
    """Affine psi_1(beta) = beta_d/(2K^d) + sum_{i<d} beta_i/K^i."""
    w = index_weights(K, d) / (2.0 * K ** d)
    return affine_net(w.reshape(1, -1), [0.0], {"construction": "index_map", "reference": "cube index map"})


def build_g(f: TargetFunction, K: int, d: int) -> CpwlFunction:
    """Breakpoint function on {j/(2K^d)} carrying shifted target values at the
    images of cube representatives and linear bridges in between."""
    K, d = int(K), int(d)
    n = 2 * K ** d
    omega_sd = f.modulus(math.sqrt(d))
    f0 = f(np.zeros(d))
    betas = np.array(list(itertools.product(range(K), repeat=d)), dtype=np.float64)
    idx = (betas @ index_weights(K, d)).round().astype(int)
    vals = f(betas / K)
    f1 = f(np.ones(d))
    known_idx = np.concatenate([idx, [n]])
    known = np.concatenate([vals, [f1]]) - f0 + omega_sd
    if not np.isfinite(known).all():
        raise NumericDomainError("target returned non-finite values")
    order = np.argsort(known_idx)
    j = np.arange(n + 1)
    g_vals = np.interp(j, known_idx[order], known[order])
    return CpwlFunction(j / n, g_vals)


# -------------------------------------------------------------- approximant

@dataclass(frozen=True, eq=False)
class Approximant:
    network: ReluNetwork
    N: int
    L: int
    d: int
    K: int
    delta: float
    norm: float
    shift: float
    bound_outside_trifling: float
    bound_global: float
    uniform: bool
    rigorous: bool = True
    extras: dict = field(default_factory=dict)

    def __call__(self, x):
        return evaluate_scalar(self.network, np.asarray(x, dtype=np.float64).reshape(-1, self.network.input_dim))

    def params(self) -> dict:
        return {"N": self.N, "L": self.L, "d": self.d, "K": self.K, "delta": self.delta,
                "norm": self.norm, "shift": self.shift}


def rate_argument(N: int, L: int, d: int) -> float:
    return float(N) ** (-2.0 / d) * float(L) ** (-2.0 / d)


def theorem_budget(N: int, L: int, d: int) -> tuple:
    """(width, depth) ceiling of the unlifted pipeline."""
    n = int(round(N ** (1.0 / d)))
    while n ** d > N:
        n -= 1
    while (n + 1) ** d <= N:
        n += 1
    return max(4 * d * n + 3 * d, 12 * N + 8), 12 * L + 14


def lifted_budget(width: int, depth: int, d: int) -> tuple:
    return 3 ** d * (width + 4), depth + 2 * d


def choose_delta(f: TargetFunction, N: int, L: int, norm: float, uniform: bool, K: int) -> float:
    d = f.dim
    cap = 1.0 / (3 * K)
    if K == 1:
        return cap
    target = f.modulus(rate_argument(N, L, d))
    if math.isinf(norm):
        if not uniform:
            return cap
        delta = f.modulus.largest_radius_below(target / d, hi=cap)
    else:
        f0 = abs(f(np.zeros(d)))
        spread = 2 * f0 + 2 * f.modulus(math.sqrt(d))
        delta = cap if spread == 0 else target ** norm / (K * d * spread ** norm)
    return max(min(delta, cap), 2.0 ** -40 / K)


def _parse_norm(norm) -> float:
    p = float(norm)
    if not (p >= 1):
        raise ArgumentError("norm p must be in [1, inf]")
    return p


def build_approximant(f: TargetFunction, N: int, L: int, norm=math.inf, uniform: bool = False,
                      delta: float | None = None, cap: int | None = None) -> Approximant:
    N, L, d = int(N), int(L), int(f.dim)
    if N < 1 or L < 1:
        raise ArgumentError("N and L must be positive")
    p = _parse_norm(norm)
    if uniform and d > LIFT_DIM_CAP:
        raise CapabilityError(f"uniform lift supports d <= {LIFT_DIM_CAP}, got d = {d}")
    K = step_count(N, L, d)
    cap = eval_cap() if cap is None else cap
    if K ** d + 1 > cap:
        raise CapacityError(f"pipeline needs K^d + 1 = {K ** d + 1} target evaluations, cap is {cap} "
                            "(raise it with RELU_FORGE_EVAL_CAP)")
    w_rate = f.modulus(rate_argument(N, L, d))
    sd = math.sqrt(d)
    bound_out = 18 * sd * w_rate
    bound_glob = 19 * sd * w_rate if (not math.isinf(p) or uniform) else math.inf
    if delta is None:
        delta = choose_delta(f, N, L, p, uniform, K)
    else:
        _check_delta(K, delta)
    f0 = f(np.zeros(d))
    common = dict(N=N, L=L, d=d, K=K, delta=float(delta), norm=p,
                  bound_outside_trifling=bound_out, bound_global=bound_glob,
                  uniform=uniform, rigorous=f.modulus.rigorous)

    if f.modulus.is_zero():
        net = constant_net(f0, d).with_metadata(construction="approximant", target=f.label, N=N, L=L, d=d,
                                                K=K, delta=float(delta).hex(), norm=p, uniform=uniform,
                                                shift=repr(float(f0)), bound_out=repr(bound_out),
                                                bound_global=repr(bound_glob))
        return Approximant(network=net, shift=f0, **common)

    omega_sd = f.modulus(sd)
    shift = f0 - omega_sd
    step = step_function_net(N, L, d, delta)
    coords = stack_parallel([select_inputs(step, [i], d) for i in range(d)], nonneg=[True] * d)
    index = postcompose_affine(coords, index_weights(K, d).reshape(1, -1))
    g = build_g(f, K, d)
    J = 2 * K ** d
    eps = f.modulus(sd / K)
    y = np.maximum(g.values[:J], 0.0)
    fitter = point_fit_net(SampleSequence(y, eps), eps, N, 2 * L)
    net = postcompose_affine(compose_serial(index, fitter), [[1.0]], [shift])
    if uniform:
        net = uniform_lift(net, K, delta, d)
    net = net.with_metadata(construction="approximant", reference="cube approximation pipeline",
                            target=f.label, N=N, L=L, d=d, K=K, delta=float(delta).hex(),
                            norm=p, uniform=uniform, shift=repr(float(shift)),
                            bound_out=repr(bound_out), bound_global=repr(bound_glob))
    return Approximant(network=net, shift=shift, extras={"eps": eps}, **common)


def uniform_lift(net: ReluNetwork, K: int, delta: float, d: int, omega_bound: float | None = None) -> ReluNetwork:
    """Replace net by the coordinatewise median of its values at x - delta e_i,
    x, x + delta e_i, one coordinate at a time.

    At most one of the three points falls into a slab of the trifling region,
    so the median is always bracketed by two good values.
    """
    d = int(d)
    if d > LIFT_DIM_CAP:
        raise CapabilityError(f"uniform lift supports d <= {LIFT_DIM_CAP}, got d = {d}")
    if net.input_dim != d:
        raise ArgumentError("network input dimension must equal d")
    if K <= 1:
        return net
    _check_delta(K, delta)
    mid = gadget_mid3()
    cur = net
    I = np.eye(d)
    for i in range(d):
        copies = [precompose_affine(cur, I, s * delta * I[i]) for s in (-1.0, 0.0, 1.0)]
        cur = compose_serial(stack_parallel(copies), mid)
    meta = dict(net.metadata)
    meta.update(lifted="true", lift_delta=float(delta).hex())
    if omega_bound is not None:
        meta["lift_error_allowance"] = repr(float(omega_bound))
    return ReluNetwork(d, cur.layers, meta)


# ------------------------------------------------------------ certification

@dataclass(frozen=True)
class SamplingPlan:
    kind: str = "auto"     # grid | monte-carlo | auto
    count: int | None = None
    seed: int = 0

    def resolve(self, d: int) -> "SamplingPlan":
        kind = self.kind
        if kind == "auto":
            kind = "grid" if d == 1 else "monte-carlo"
        count = self.count
        if count is None:
            count = 10_000 if kind == "grid" else 100_000
        return SamplingPlan(kind, int(count), int(self.seed))

    def points(self, d: int) -> np.ndarray:
        plan = self.resolve(d)
        if plan.kind == "grid":
            per = max(2, int(round(plan.count ** (1.0 / d))))
            axes = [np.linspace(0.0, 1.0, per)] * d
            return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        if plan.kind == "monte-carlo":
            return np.random.default_rng(plan.seed).random((plan.count, d))
        raise ArgumentError(f"unknown sampling plan {plan.kind!r}")


@dataclass(frozen=True)
class ErrorReport:
    norm: float
    measured_outside_trifling: float
    measured_global: float
    bound_outside_trifling: float
    bound_global: float
    sample_plan: tuple
    passed: bool
    measured_inside_trifling: float = 0.0
    rigorous: bool = True

    @property
    def pass_(self) -> bool:
        return self.passed


def _batched_errors(net: ReluNetwork, f: Callable, X: np.ndarray, batch: int = 20_000) -> np.ndarray:
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], batch):
        xb = X[s:s + batch]
        out[s:s + batch] = np.abs(evaluate_scalar(net, xb) - f(xb))
    return out


def lp_norm(errors: np.ndarray, p: float) -> float:
    if errors.size == 0:
        return 0.0
    if math.isinf(p):
        return float(errors.max())
    return float(np.mean(errors ** p) ** (1.0 / p))


def certify(approx: Approximant, f: TargetFunction, plan: SamplingPlan | None = None) -> ErrorReport:
    plan = (plan or SamplingPlan()).resolve(f.dim)
    X = plan.points(f.dim)
    err = _batched_errors(approx.network, f, X)
    trif = in_trifling(X, approx.K, approx.delta, f.dim)
    out = float(err[~trif].max()) if (~trif).any() else 0.0
    inside = float(err[trif].max()) if trif.any() else 0.0
    glob = lp_norm(err, approx.norm)
    ok = out <= approx.bound_outside_trifling and glob <= approx.bound_global
    return ErrorReport(approx.norm, out, glob, approx.bound_outside_trifling, approx.bound_global,
                       (plan.kind, plan.count, plan.seed), bool(ok), inside, approx.rigorous)


def format_norm(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


def report_row(approx: Approximant, rep: ErrorReport) -> list:
    return [approx.N, approx.L, approx.K, repr(approx.delta), format_norm(rep.norm),
            repr(rep.measured_outside_trifling), repr(rep.bound_outside_trifling),
            repr(rep.measured_global), repr(rep.bound_global), "true" if rep.passed else "false"]


def rate_sweep(f: TargetFunction, pairs, norm=math.inf, plan: SamplingPlan | None = None,
               uniform: bool = False) -> list:
    """Build and certify at each (N, L); rows sorted by (N, L).

    A failure in one row is recorded (pass = false, error text in the last
    element) and the sweep continues.
    """
    rows = []
    for N, L in sorted(pairs):
        try:
            a = build_approximant(f, N, L, norm, uniform)
            rep = certify(a, f, plan)
            rows.append({"N": N, "L": L, "K": a.K, "delta": a.delta, "norm": rep.norm,
                         "measured_out": rep.measured_outside_trifling,
                         "bound_out": rep.bound_outside_trifling,
                         "measured_global": rep.measured_global, "bound_global": rep.bound_global,
                         "pass": rep.passed, "error": ""})
        except Exception as exc:  # noqa: BLE001 - sweep keeps going by design
            rows.append({"N": N, "L": L, "K": step_count(N, L, f.dim), "delta": float("nan"),
                         "norm": float(norm), "measured_out": float("nan"), "bound_out": float("nan"),
                         "measured_global": float("nan"), "bound_global": float("nan"),
                         "pass": False, "error": f"{type(exc).__name__}: {exc}"})
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r["N"], r["L"], r["K"], repr(float(r["delta"])), format_norm(r["norm"]),
                    repr(float(r["measured_out"])), repr(float(r["bound_out"])),
                    repr(float(r["measured_global"])), repr(float(r["bound_global"])),
                    "true" if r["pass"] else "false"])
    return buf.getvalue()


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def approximant_from_network(net: ReluNetwork, f: TargetFunction) -> Approximant:
    """Rebuild the Approximant record of a deserialized pipeline network from
    its metadata and the target's modulus."""
    meta = net.metadata
    try:
        N, L, d, K = (int(meta[k]) for k in ("N", "L", "d", "K"))
        delta = float.fromhex(meta["delta"])
        p = float(meta["norm"])
        uniform = meta["uniform"] == "True"
    except (KeyError, ValueError) as exc:
        raise ArgumentError(f"network metadata lacks approximant parameters ({exc})") from None
    if d != f.dim:
        raise ArgumentError(f"network was built for d = {d}, target has d = {f.dim}")
    w_rate = f.modulus(rate_argument(N, L, d))
    sd = math.sqrt(d)
    bound_glob = 19 * sd * w_rate if (not math.isinf(p) or uniform) else math.inf
    return Approximant(net, N, L, d, K, delta, p, float(meta.get("shift", "nan")),
                       18 * sd * w_rate, bound_glob, uniform, f.modulus.rigorous)
