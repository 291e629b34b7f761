"""Network representation, evaluation, composition algebra, gadgets and
serialization.

A network is a list of affine layers ``(W, b)``; ReLU is applied after every
layer except the last one.  Everything else in the package emits these.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ArgumentError,
    CompositionError,
    InputShapeError,
    NumericDomainError,
    ParseError,
    VersionError,
)

FORMAT_VERSION = 1


def relu(z):
    return np.maximum(z, 0.0)


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    """Explicit ReLU feed-forward network.

    ``layers[i] = (W_i, b_i)``; ``W_0`` has ``input_dim`` columns.  The
    network computes ``L_last o relu o ... o relu o L_0``.
    """

    input_dim: int
    layers: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.input_dim) < 1:
            raise ArgumentError("input_dim must be positive")
        if len(self.layers) == 0:
            raise ArgumentError("a network needs at least one (output) layer")
        frozen = []
        cols = int(self.input_dim)
        for i, (W, b) in enumerate(self.layers):
            W = np.array(W, dtype=np.float64, ndmin=2)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if W.ndim != 2 or W.shape[1] != cols:
                raise ArgumentError(
                    f"layer {i}: weight matrix has shape {W.shape}, expected (*, {cols})")
            if b.shape[0] != W.shape[0]:
                raise ArgumentError(
                    f"layer {i}: bias length {b.shape[0]} != row count {W.shape[0]}")
            W.setflags(write=False)
            b.setflags(write=False)
            frozen.append((W, b))
            cols = W.shape[0]
        object.__setattr__(self, "input_dim", int(self.input_dim))
        object.__setattr__(self, "layers", tuple(frozen))
        object.__setattr__(self, "metadata", {str(k): str(v) for k, v in dict(self.metadata).items()})

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def depth(self) -> int:
        """Number of hidden layers."""
        return len(self.layers) - 1

    @property
    def width(self) -> int:
        """Maximum hidden-layer size (0 for a pure affine map)."""
        return max((W.shape[0] for W, _ in self.layers[:-1]), default=0)

    @property
    def widths(self) -> list:
        return [W.shape[0] for W, _ in self.layers[:-1]]

    def is_finite(self) -> bool:
        return all(np.isfinite(W).all() and np.isfinite(b).all() for W, b in self.layers)

    def with_metadata(self, **kw) -> "ReluNetwork":
        meta = dict(self.metadata)
        meta.update({k: str(v) for k, v in kw.items()})
        return ReluNetwork(self.input_dim, self.layers, meta)

    def __call__(self, x):
        return evaluate(self, x)

    def structurally_equal(self, other: "ReluNetwork") -> bool:
        if self.input_dim != other.input_dim or len(self.layers) != len(other.layers):
            return False
        for (W1, b1), (W2, b2) in zip(self.layers, other.layers):
            if W1.shape != W2.shape or not (np.array_equal(W1, W2) and np.array_equal(b1, b2)):
                return False
        return self.metadata == other.metadata


def evaluate(net: ReluNetwork, x) -> np.ndarray:
    """Forward pass.

    ``x`` may be a single vector of length ``input_dim`` (returns a vector)
    or a batch of shape ``(n, input_dim)`` (returns ``(n, output_dim)``).
    For ``input_dim == 1`` a flat array of ``n`` scalars is also accepted as a
    batch when ``n != 1``.
    """
    a = np.asarray(x, dtype=np.float64)
    single = False
    if a.ndim == 0:
        a = a.reshape(1, 1)
        single = True
    elif a.ndim == 1:
        if a.shape[0] == net.input_dim:
            a = a.reshape(1, -1)
            single = True
        elif net.input_dim == 1:
            a = a.reshape(-1, 1)
        else:
            raise InputShapeError(f"expected input of length {net.input_dim}, got {a.shape[0]}")
    elif a.ndim != 2 or a.shape[1] != net.input_dim:
        raise InputShapeError(f"expected inputs of shape (n, {net.input_dim}), got {a.shape}")
    if not np.isfinite(a).all():
        raise NumericDomainError("non-finite network input")
    if not net.is_finite():
        raise NumericDomainError("network has non-finite weights")
    h = a.T
    last = len(net.layers) - 1
    for i, (W, b) in enumerate(net.layers):
        h = W @ h + b[:, None]
        if i < last:
            np.maximum(h, 0.0, out=h)
    out = h.T
    return out[0] if single else out


def evaluate_scalar(net: ReluNetwork, x) -> np.ndarray:
    """Evaluate a scalar-output network on a batch; returns a flat array."""
    out = evaluate(net, x)
    return np.asarray(out).reshape(-1) if np.ndim(out) > 1 else np.asarray(out)


def activation_pattern(net: ReluNetwork, x) -> np.ndarray:
    """Boolean vector of active hidden units at a single point ``x``."""
    h = np.asarray(x, dtype=np.float64).reshape(-1)
    pats = []
    for W, b in net.layers[:-1]:
        h = W @ h + b
        pats.append(h > 0)
        h = relu(h)
    return np.concatenate(pats) if pats else np.zeros(0, dtype=bool)


# ----------------------------------------------------------------- algebra

def affine_net(W, b, metadata=None) -> ReluNetwork:
    """Depth-0 network x -> W x + b."""
    W = np.array(W, dtype=np.float64, ndmin=2)
    return ReluNetwork(W.shape[1], ((W, np.asarray(b, dtype=np.float64).reshape(-1)),),
                       metadata or {"construction": "affine"})


def identity_gadget(dim: int = 1) -> ReluNetwork:
    """x = relu(x) - relu(-x), one hidden layer of width 2*dim."""
    I = np.eye(dim)
    return ReluNetwork(dim, ((np.vstack([I, -I]), np.zeros(2 * dim)),
                             (np.hstack([I, -I]), np.zeros(dim))),
                       {"construction": "identity_gadget"})


def compose_serial(first: ReluNetwork, second: ReluNetwork) -> ReluNetwork:
    """Network computing ``second(first(x))``.

    The output affine map of ``first`` is fused into the first layer of
    ``second``, so depths add and no hidden layer is inserted.
    """
    if first.output_dim != second.input_dim:
        raise CompositionError(
            f"cannot compose: first outputs {first.output_dim}, second expects {second.input_dim}")
    Wo, bo = first.layers[-1]
    Wi, bi = second.layers[0]
    fused = (Wi @ Wo, Wi @ bo + bi)
    layers = first.layers[:-1] + (fused,) + second.layers[1:]
    meta = dict(second.metadata)
    meta.setdefault("construction", "composition")
    return ReluNetwork(first.input_dim, layers, meta)


def precompose_affine(net: ReluNetwork, A, c=None) -> ReluNetwork:
    """Network computing ``net(A x + c)``; ``A`` has ``net.input_dim`` rows."""
    A = np.array(A, dtype=np.float64, ndmin=2)
    if c is None:
        c = np.zeros(A.shape[0])
    return compose_serial(affine_net(A, c), net).with_metadata(**net.metadata)


def postcompose_affine(net: ReluNetwork, A, c=None) -> ReluNetwork:
    """Network computing ``A net(x) + c``."""
    A = np.array(A, dtype=np.float64, ndmin=2)
    if c is None:
        c = np.zeros(A.shape[0])
    return compose_serial(net, affine_net(A, c)).with_metadata(**net.metadata)


def select_inputs(net: ReluNetwork, indices: Sequence[int], input_dim: int) -> ReluNetwork:
    """Feed ``x[indices]`` of a length-``input_dim`` vector into ``net``."""
    S = np.zeros((len(indices), input_dim))
    S[np.arange(len(indices)), list(indices)] = 1.0
    return precompose_affine(net, S)


def _pad_to_depth(net: ReluNetwork, depth: int, nonneg: bool) -> list:
    """Layer list of ``net`` extended to ``depth`` hidden layers.

    The output is carried through the extra layers either by the pair
    (relu(s), relu(-s)) or, for outputs known to be nonnegative, by a single
    relu(s) channel.
    """
    layers = list(net.layers)
    extra = depth - net.depth
    if extra == 0:
        return layers
    W, b = layers.pop()
    k = W.shape[0]
    I = np.eye(k)
    if nonneg:
        layers.append((W, b))
        carry, out = I, I
    else:
        layers.append((np.vstack([W, -W]), np.concatenate([b, -b])))
        carry, out = np.eye(2 * k), np.hstack([I, -I])
    for _ in range(extra - 1):
        layers.append((carry, np.zeros(carry.shape[0])))
    layers.append((out, np.zeros(k)))
    return layers


def _block_diag(mats):
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def stack_parallel(nets: Sequence[ReluNetwork], nonneg: Sequence[bool] | None = None) -> ReluNetwork:
    """Run networks side by side on the same input, concatenating outputs.

    Shallower networks are padded to the common depth with passthrough
    channels; ``nonneg[i]`` marks nets whose output is known to be >= 0 so a
    single channel suffices.
    """
    nets = list(nets)
    if not nets:
        raise ArgumentError("stack_parallel needs at least one network")
    d = nets[0].input_dim
    if any(n.input_dim != d for n in nets):
        raise ArgumentError("all stacked networks must share input_dim")
    if nonneg is None:
        nonneg = [False] * len(nets)
    depth = max(n.depth for n in nets)
    padded = [_pad_to_depth(n, depth, bool(nn)) for n, nn in zip(nets, nonneg)]
    layers = []
    for i in range(depth + 1):
        Ws = [p[i][0] for p in padded]
        bs = np.concatenate([p[i][1] for p in padded])
        W = np.vstack(Ws) if i == 0 else _block_diag(Ws)
        layers.append((W, bs))
    return ReluNetwork(d, layers, {"construction": "stack_parallel"})


def linear_combination(nets: Sequence[ReluNetwork], coeffs, offset=0.0,
                       nonneg: Sequence[bool] | None = None) -> ReluNetwork:
    """Scalar network sum_i coeffs[i] * nets[i](x) + offset."""
    stacked = stack_parallel(nets, nonneg)
    c = np.asarray(coeffs, dtype=np.float64).reshape(1, -1)
    return postcompose_affine(stacked, c, [offset])


# ---------------------------------------------------------- piecewise linear

@dataclass(frozen=True, eq=False)
class CpwlFunction:
    """One-dimensional continuous piecewise-linear function."""

    breakpoints: np.ndarray
    values: np.ndarray
    left_mode: str = "constant"
    right_mode: str = "constant"

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=np.float64).reshape(-1)
        y = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if x.size == 0 or x.size != y.size:
            raise ArgumentError("need equal, nonzero numbers of breakpoints and values")
        if np.any(np.diff(x) <= 0):
            raise ArgumentError("breakpoints must be strictly increasing")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise NumericDomainError("non-finite breakpoint data")
        for mode in (self.left_mode, self.right_mode):
            if mode not in ("constant", "linear"):
                raise ArgumentError(f"unknown extension mode {mode!r}")
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", y)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        x, y = self.breakpoints, self.values
        out = np.interp(t, x, y)
        if x.size > 1:
            s = self.slopes()
            if self.left_mode == "linear":
                out = np.where(t < x[0], y[0] + s[0] * (t - x[0]), out)
            if self.right_mode == "linear":
                out = np.where(t > x[-1], y[-1] + s[-1] * (t - x[-1]), out)
        return out


def compile_cpwl(f: CpwlFunction) -> ReluNetwork:
    """One-hidden-layer network that equals ``f`` everywhere.

    Slope-change decomposition: f(t) = y_0 + sum_i c_i relu(t - x_i), plus a
    relu(x_0 - t) unit when the left extension is linear.
    """
    x, y = f.breakpoints, f.values
    k = x.size
    s = f.slopes() if k > 1 else np.zeros(0)
    c = np.zeros(k)
    if k > 1:
        c[0] = s[0]
        c[1:-1] = np.diff(s)
        c[-1] = -s[-1] if f.right_mode == "constant" else 0.0
    W1 = np.ones((k, 1))
    b1 = -x.copy()
    W2 = c.reshape(1, -1)
    if k > 1 and f.left_mode == "linear":
        W1 = np.vstack([W1, [[-1.0]]])
        b1 = np.append(b1, x[0])
        W2 = np.hstack([W2, [[-s[0]]]])
    return ReluNetwork(1, ((W1, b1), (W2, np.array([y[0]]))),
                       {"construction": "compile_cpwl"})


# ------------------------------------------------------------------ gadgets

def _pair_abs_rows():
    # rows: a+b, -(a+b), a-b, b-a acting on (a, b)
    return np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])


def gadget_min2() -> ReluNetwork:
    """min(a, b) = ((a+b) - |a-b|) / 2, width 4, depth 1."""
    W2 = np.array([[0.5, -0.5, -0.5, -0.5]])
    return ReluNetwork(2, ((_pair_abs_rows(), np.zeros(4)), (W2, np.zeros(1))),
                       {"construction": "gadget_min2"})


def gadget_max2() -> ReluNetwork:
    """max(a, b) = ((a+b) + |a-b|) / 2, width 4, depth 1."""
    W2 = np.array([[0.5, -0.5, 0.5, 0.5]])
    return ReluNetwork(2, ((_pair_abs_rows(), np.zeros(4)), (W2, np.zeros(1))),
                       {"construction": "gadget_max2"})


def gadget_mid3() -> ReluNetwork:
    """Median of three, as (a+b+c) - max3 - min3; depth 2, width 10."""
    # layer 1 units: a+, a-, b+, b-, c+, c-, (a-b)+, (b-a)+
    W1 = np.array([
        [1, 0, 0], [-1, 0, 0],
        [0, 1, 0], [0, -1, 0],
        [0, 0, 1], [0, 0, -1],
        [1, -1, 0], [-1, 1, 0],
    ], dtype=np.float64)
    a = np.array([1, -1, 0, 0, 0, 0, 0, 0], dtype=np.float64)
    b = np.array([0, 0, 1, -1, 0, 0, 0, 0], dtype=np.float64)
    c = np.array([0, 0, 0, 0, 1, -1, 0, 0], dtype=np.float64)
    absab = np.array([0, 0, 0, 0, 0, 0, 1, 1], dtype=np.float64)
    mx = 0.5 * (a + b + absab)   # max(a, b) as a linear form of layer 1
    mn = 0.5 * (a + b - absab)   # min(a, b)
    s = a + b + c
    rows = []
    for m in (mx, mn):
        rows += [m + c, -(m + c), m - c, c - m]
    rows += [s, -s]
    W2 = np.array(rows)
    # max3 = (u0 - u1 + u2 + u3)/2, min3 = (u4 - u5 - u6 - u7)/2, sum = u8 - u9
    out = np.array([[-0.5, 0.5, -0.5, -0.5, -0.5, 0.5, 0.5, 0.5, 1.0, -1.0]])
    return ReluNetwork(3, ((W1, np.zeros(8)), (W2, np.zeros(10)), (out, np.zeros(1))),
                       {"construction": "gadget_mid3"})


# ------------------------------------------------------------ serialization

def _hex(v) -> str:
    return float(v).hex()


def serialize(net: ReluNetwork) -> bytes:
    """Versioned text document; reals as hexadecimal float literals."""
    doc = {
        "format_version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "layers": [
            {"weights": [[_hex(v) for v in row] for row in W], "bias": [_hex(v) for v in b]}
            for W, b in net.layers
        ],
        "metadata": dict(sorted(net.metadata.items())),
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


def _real(tok, where):
    if not isinstance(tok, str):
        raise ParseError("real must be a hexadecimal float string", where)
    try:
        return float.fromhex(tok)
    except (ValueError, OverflowError):
        raise ParseError(f"bad hexadecimal float {tok!r}", where) from None


def deserialize(data) -> ReluNetwork:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError("document is not valid UTF-8", f"byte {e.start}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, f"line {e.lineno} column {e.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", "$")
    for key in ("format_version", "input_dim", "layers", "metadata"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", "$")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionError(f"unsupported format_version {doc['format_version']!r}", "$.format_version")
    if not isinstance(doc["input_dim"], int) or doc["input_dim"] < 1:
        raise ParseError("input_dim must be a positive integer", "$.input_dim")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise ParseError("layers must be a nonempty array", "$.layers")
    if not isinstance(doc["metadata"], dict):
        raise ParseError("metadata must be an object", "$.metadata")
    layers = []
    for i, lay in enumerate(doc["layers"]):
        where = f"$.layers[{i}]"
        if not isinstance(lay, dict) or "weights" not in lay or "bias" not in lay:
            raise ParseError("layer needs 'weights' and 'bias'", where)
        rows = lay["weights"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ParseError("weights must be a nested array", where + ".weights")
        W = [[_real(t, f"{where}.weights[{r}][{c}]") for c, t in enumerate(row)]
             for r, row in enumerate(rows)]
        if not isinstance(lay["bias"], list):
            raise ParseError("bias must be an array", where + ".bias")
        b = [_real(t, f"{where}.bias[{j}]") for j, t in enumerate(lay["bias"])]
        if len({len(r) for r in W}) > 1:
            raise ParseError("ragged weight matrix", where + ".weights")
        cols = len(W[0]) if W else (layers[-1][0].shape[0] if layers else doc["input_dim"])
        layers.append((np.array(W, dtype=np.float64).reshape(len(W), cols), np.array(b, dtype=np.float64)))
    try:
        return ReluNetwork(doc["input_dim"], layers, {str(k): str(v) for k, v in doc["metadata"].items()})
    except ArgumentError as e:
        raise ParseError(str(e), "$.layers") from None
