"""Explicit network constructions: point fitting, wide-to-deep reshaping,
staircase (step) networks, bit extraction, and the tolerance point fitter.

Every constructor returns a :class:`ReluNetwork` tagged with
``metadata['construction']``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CapabilityError, CapacityError
from .fnn_core import (
    ReluNetwork,
    affine_net,
    compose_serial,
    gadget_min2,
    postcompose_affine,
    precompose_affine,
    select_inputs,
    stack_parallel,
)

BIT_CAP = 30


def _tag(net: ReluNetwork, name: str, ref: str, **extra) -> ReluNetwork:
    return net.with_metadata(construction=name, reference=ref, **extra)


def constant_net(value: float, input_dim: int = 1) -> ReluNetwork:
    return affine_net(np.zeros((1, input_dim)), [float(value)], {"construction": "constant"})


def relu_carrier(depth: int, input_dim: int = 1, index: int = 0) -> ReluNetwork:
    """Width-1 network passing relu(x[index]) through ``depth`` hidden layers."""
    first = np.zeros((1, input_dim))
    first[0, index] = 1.0
    layers = [(first, np.zeros(1))]
    layers += [(np.ones((1, 1)), np.zeros(1)) for _ in range(depth - 1)]
    layers.append((np.ones((1, 1)), np.zeros(1)))
    return ReluNetwork(input_dim, layers, {"construction": "relu_carrier"})


# ------------------------------------------------------------ point fitting

def _cpwl_weights(knots, node_values, tail_slope):
    """Coefficients (w, c) with sum_p w_p relu(t - knots_p) + c interpolating
    ``node_values`` at ``knots``, constant to the left, ``tail_slope`` after."""
    slopes = np.diff(node_values) / np.diff(knots)
    slopes = np.append(slopes, tail_slope)
    w = np.empty_like(slopes)
    w[0] = slopes[0]
    w[1:] = np.diff(slopes)
    return w, node_values[0]


def fit_points_two_layer(samples, N1: int, N2: int) -> ReluNetwork:
    """Two-hidden-layer network of widths [2*N1, 2*N2+1] through the samples.

    Samples are split into N1 blocks of N2+1 consecutive points plus one
    final point.  The first layer places kinks at the first and last point of
    every block, so second-layer pre-activations are piecewise linear with
    kinks only there.  Inside each block the interpolant is an affine part
    plus signed slope changes at the interior points; one unit per interior
    position collects positive changes, one collects negative changes, and
    one offset unit carries the blockwise affine part.

    The network passes through every sample and is linear between samples of
    the same block; on the segment joining two blocks it may bend.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ArgumentError("samples must be (x, y) pairs")
    N1, N2 = int(N1), int(N2)
    if N1 < 1 or N2 < 1:
        raise ArgumentError("N1 and N2 must be positive")
    n_expected = N1 * (N2 + 1) + 1
    if pts.shape[0] != n_expected:
        raise ArgumentError(f"need exactly N1*(N2+1)+1 = {n_expected} samples, got {pts.shape[0]}")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(np.diff(x) <= 0):
        raise ArgumentError("sample abscissae must be strictly increasing")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ArgumentError("samples must be finite")

    B = N2 + 1
    starts = np.arange(N1) * B
    knots = np.empty(2 * N1)
    knots[0::2] = x[starts]
    knots[1::2] = x[starts + N2]
    x_final, y_final = x[-1], y[-1]

    W1 = np.ones((2 * N1, 1))
    b1 = -knots

    # per-block affine part and interior slope changes
    slopes = np.diff(y) / np.diff(x)
    n_int = N2 - 1
    pos = np.zeros((N1, n_int))
    neg = np.zeros((N1, n_int))
    affine_slope = np.empty(N1)
    for j in range(N1):
        s = slopes[starts[j]:starts[j] + N2]
        affine_slope[j] = s[0]
        ch = np.diff(s)
        pos[j] = np.maximum(ch, 0.0)
        neg[j] = np.maximum(-ch, 0.0)

    rows_W, rows_b, out = [], [], []
    kink_vals_total = np.zeros(2 * N1)
    final_total = 0.0
    for k in range(1, N2):
        xk = x[starts + k]              # interior point k of every block
        for coef, sign in ((pos[:, k - 1], 1.0), (neg[:, k - 1], -1.0)):
            vals = np.empty(2 * N1)
            vals[0::2] = coef * (knots[0::2] - xk)
            vals[1::2] = coef * (knots[1::2] - xk)
            w, c = _cpwl_weights(knots, vals, 0.0)
            rows_W.append(w)
            rows_b.append(c)
            out.append(sign)
            kink_vals_total += sign * np.maximum(vals, 0.0)
            final_total += sign * max(vals[-1], 0.0)

    # affine carrier: equals the block line on each block, hits y_final
    lin = np.empty(2 * N1)
    lin[0::2] = y[starts] + affine_slope * (knots[0::2] - x[starts])
    lin[1::2] = y[starts] + affine_slope * (knots[1::2] - x[starts])
    g_final = y_final - final_total
    tail = (g_final - lin[-1]) / (x_final - knots[-1])
    shift = max(0.0, -min(lin.min(), g_final))
    w, c = _cpwl_weights(knots, lin + shift, tail)
    rows_W.append(w)
    rows_b.append(c)
    out.append(1.0)
    # pad with inactive units up to 2*N2 + 1
    while len(rows_W) < 2 * N2 + 1:
        rows_W.append(np.zeros(2 * N1))
        rows_b.append(0.0)
        out.append(0.0)

    W2 = np.array(rows_W)
    b2 = np.array(rows_b)
    W3 = np.array(out).reshape(1, -1)
    b3 = np.array([-shift])
    net = ReluNetwork(1, ((W1, b1), (W2, b2), (W3, b3)), {})
    return _tag(net, "fit_points_two_layer", "two-layer point fitting", N1=N1, N2=N2)


# ---------------------------------------------------------------- reshaping

def pad_two_layer(net: ReluNetwork, N: int, L: int) -> ReluNetwork:
    """Insert inactive units so the hidden widths become exactly [N, N*L]."""
    if net.depth != 2:
        raise ArgumentError("expected a two-hidden-layer network")
    (W0, b0), (W1, b1), (W2, b2) = net.layers
    n1, n2 = W0.shape[0], W1.shape[0]
    if n1 > N or n2 > N * L:
        raise ArgumentError(f"widths [{n1}, {n2}] do not fit into [{N}, {N * L}]")
    W0p = np.vstack([W0, np.zeros((N - n1, W0.shape[1]))])
    b0p = np.concatenate([b0, np.zeros(N - n1)])
    W1p = np.zeros((N * L, N))
    W1p[:n2, :n1] = W1
    b1p = np.concatenate([b1, np.zeros(N * L - n2)])
    W2p = np.hstack([W2, np.zeros((W2.shape[0], N * L - n2))])
    return ReluNetwork(net.input_dim, ((W0p, b0p), (W1p, b1p), (W2p, b2)), net.metadata)


def wide_to_deep(net: ReluNetwork, L: int, N: int | None = None) -> ReluNetwork:
    """Trade width for depth: widths [N, N*L] become L+1 layers of width <= 2N+2.

    The wide second layer is split into L blocks h_l evaluated one per layer,
    while the first-layer output g is carried alongside and the partial output
    s_l = s_{l-1} + W_{2,l} h_l travels as the pair (relu(s), relu(-s)).
    If ``N`` is given the network is first padded to [N, N*L].
    """
    L = int(L)
    if L < 1:
        raise ArgumentError("L must be positive")
    if N is not None:
        net = pad_two_layer(net, int(N), L)
    if net.depth != 2 or net.output_dim != 1:
        raise ArgumentError("wide_to_deep needs two hidden layers and a scalar output")
    (W0, b0), (W1, b1), (W2, b2) = net.layers
    N = W0.shape[0]
    if W1.shape[0] != N * L:
        raise ArgumentError(f"second hidden layer must have N*L = {N * L} units, got {W1.shape[0]}")
    I = np.eye(N)
    blocks = [(W1[l * N:(l + 1) * N], b1[l * N:(l + 1) * N], W2[:, l * N:(l + 1) * N]) for l in range(L)]

    layers = [(W0, b0)]
    # layer 2: [g, h_1]
    Wa, ba, _ = blocks[0]
    if L == 1:
        layers.append((Wa, ba))
        layers.append((blocks[0][2], b2))
        return _tag(ReluNetwork(net.input_dim, layers, {}), "wide_to_deep", "width-to-depth reshaping", N=N, L=L)
    layers.append((np.vstack([I, Wa]), np.concatenate([np.zeros(N), ba])))
    prev_has_s = False
    for l in range(1, L):
        Wl, bl, _ = blocks[l]
        Wout_prev = blocks[l - 1][2].reshape(-1)
        # s_l = (s+ - s-) + W_{2,l-1} h_{l-1}, expressed on the previous layer
        s_row = np.concatenate([np.zeros(N), Wout_prev] + ([np.array([1.0, -1.0])] if prev_has_s else []))
        cols = s_row.size
        rows = np.zeros((2 * N + 2, cols))
        rows[:N, :N] = I                 # carry g
        rows[N:2 * N, :N] = Wl           # h_l from g
        rows[2 * N] = s_row
        rows[2 * N + 1] = -s_row
        bias = np.concatenate([np.zeros(N), bl, [0.0, 0.0]])
        layers.append((rows, bias))
        prev_has_s = True
    last = np.concatenate([np.zeros(N), blocks[-1][2].reshape(-1), [1.0, -1.0]]).reshape(1, -1)
    layers.append((last, b2))
    out = ReluNetwork(net.input_dim, layers, {})
    return _tag(out, "wide_to_deep", "width-to-depth reshaping", N=N, L=L)


def deep_fit(samples, N1: int, N2: int, N: int, L: int) -> ReluNetwork:
    """Point fit of widths [2*N1, 2*N2+1] reshaped to width 2N+2, depth L+1."""
    return wide_to_deep(fit_points_two_layer(samples, N1, N2), L, N=N)


def _encoder(samples, N: int, L: int) -> ReluNetwork:
    """Fit of M+1 samples (M = N^2 L) at 0..M; with M = 1 the data is one
    nonnegative constant, emitted as a depth-1 net."""
    if N * L == 1:
        c = float(samples[0][1])
        return ReluNetwork(1, ((np.zeros((1, 1)), [c]), (np.ones((1, 1)), np.zeros(1))), {})
    return deep_fit(samples, N, N * L - 1, 2 * N, L)


# ------------------------------------------------------------------- steps

def step_count(N: int, L: int, d: int) -> int:
    """K = floor(N^{1/d})^2 * floor(L^{2/d})."""
    return _iroot(N, d) ** 2 * _iroot(L * L, d)


def _iroot(n: int, d: int) -> int:
    """floor(n ** (1/d)) computed exactly for integers."""
    r = int(round(n ** (1.0 / d)))
    while r ** d > n:
        r -= 1
    while (r + 1) ** d <= n:
        r += 1
    return r


def _staircase_samples(n_steps, scale, delta, tail_x=2.0):
    """Pairs (k*scale, k), ((k+1)*scale - delta, k); last plateau ends at
    n_steps*scale; final point (tail_x, n_steps-1)."""
    pts = []
    for k in range(n_steps):
        pts.append((k * scale, k))
        right = (k + 1) * scale - delta if k < n_steps - 1 else n_steps * scale
        pts.append((right, k))
    pts.append((tail_x, n_steps - 1))
    return pts


def step_function_net(N: int, L: int, d: int, delta: float) -> ReluNetwork:
    """Scalar network equal to k on [k/K, (k+1)/K - delta] (the last plateau
    runs up to 1 and beyond, to 2), with K = floor(N^{1/d})^2 floor(L^{2/d})."""
    N, L, d = int(N), int(L), int(d)
    if min(N, L, d) < 1:
        raise ArgumentError("N, L, d must be positive")
    K = step_count(N, L, d)
    if K == 1:
        return _tag(constant_net(0.0), "step_function_net", "staircase network", K=1, delta=delta)
    if not (0.0 < delta <= 1.0 / (3 * K)):
        raise ArgumentError(f"delta must lie in (0, 1/(3K)] = (0, {1.0 / (3 * K)}]")
    if d == 1:
        M = N * N * L
        # coarse index m on [m/M, (m+1)/M - delta]
        coarse = deep_fit(_staircase_samples(M, 1.0 / M, delta), N, 2 * N * L - 1, 2 * N, 2 * L)
        first = stack_parallel([coarse, relu_carrier(coarse.depth)], nonneg=[True, True])
        # fine index l of the remainder r = x - m/M on [l/K, (l+1)/K - delta]
        fine = deep_fit(_staircase_samples(L, 1.0 / K, delta), 1, 2 * L - 1, 2, 2 * L)
        fine = precompose_affine(fine, [[-1.0 / M, 1.0]])
        second = stack_parallel([fine, relu_carrier(fine.depth, 2, 0)], nonneg=[True, True])
        second = postcompose_affine(second, [[1.0, float(L)]])
        net = compose_serial(first, second)
    else:
        n = _iroot(N, d)
        l = _iroot(L * L, d)
        net = deep_fit(_staircase_samples(K, 1.0 / K, delta), n, 2 * n * l - 1, 2 * n, 2 * l)
    return _tag(net, "step_function_net", "staircase network", N=N, L=L, d=d, K=K, delta=float(delta).hex())


# ------------------------------------------------------------ bit extraction

def bit_extract_net(L: int) -> ReluNetwork:
    """Two-input network (xi, l) -> theta_1 + ... + theta_l for
    xi = 0.theta_1...theta_L in binary, width 7, depth 2L.

    Bits are peeled one per pair of layers: theta_j = relu(T(xi_j)+1) -
    relu(T(xi_j)) with T(t) = (t - 1/2)/delta, xi_{j+1} = 2 xi_j - theta_j.
    The threshold width is delta = 2^-(L+1), which leaves a margin of
    2^-(L+2) around every encoded value.
    """
    L = int(L)
    if L < 1:
        raise ArgumentError("L must be positive")
    if L > BIT_CAP:
        raise CapabilityError(f"bit extraction supports at most {BIT_CAP} bits, got {L}")
    delta = 2.0 ** -(L + 1)
    inv = 1.0 / delta
    layers = []
    for j in range(1, L + 1):
        # odd layer input: j == 1 -> (xi, l); otherwise [xi, l, S, z] from the even layer
        if j == 1:
            xi, ell, S, z = np.array([1.0, 0]), np.array([0, 1.0]), np.zeros(2), np.zeros(2)
            cin = 2
        else:
            xi, ell, S, z = np.eye(4)
            cin = 4
        Sn = S + z
        W = np.array([
            inv * xi,            # a = relu(T(xi) + 1)
            inv * xi,            # b = relu(T(xi))
            xi,                  # xi carried
            ell,                 # c = relu(l - j + 1)
            ell,                 # e = relu(l - j)
            ell,                 # l carried
            Sn,                  # running sum carried
        ]).reshape(7, cin)
        bias = np.array([-0.5 * inv + 1.0, -0.5 * inv, 0.0, -j + 1.0, -float(j), 0.0, 0.0])
        layers.append((W, bias))
        # even layer: [xi_{j+1}, l, S, z_j]
        W = np.array([
            [-1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            [1.0, -1.0, 0.0, 1.0, -1.0, 0.0, 0.0],
        ])
        bias = np.array([0.0, 0.0, 0.0, -1.0])
        layers.append((W, bias))
    layers.append((np.array([[0.0, 0.0, 1.0, 1.0]]), np.zeros(1)))
    net = ReluNetwork(2, layers, {})
    return _tag(net, "bit_extract_net", "bit extraction", L=L)


def bit_encode(bits) -> float:
    """0.b_1 b_2 ... b_L in binary."""
    bits = np.asarray(bits).reshape(-1)
    return float(sum(int(b) * 2.0 ** -(i + 1) for i, b in enumerate(bits)))


def bit_sum_net(bits, N: int, L: int) -> ReluNetwork:
    """Two-input network (m, l) -> sum_{j<=l} bits[m, j] on the grid
    m in {0..M-1}, l in {0..L-1}, M = N^2 L."""
    bits = np.asarray(bits)
    N, L = int(N), int(L)
    M = N * N * L
    if bits.shape != (M, L):
        raise ArgumentError(f"bit matrix must have shape ({M}, {L}), got {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise ArgumentError("bit matrix entries must be 0 or 1")
    if L > BIT_CAP:
        raise CapabilityError(f"bit extraction supports at most {BIT_CAP} bits, got {L}")
    # encodings shifted by a quarter of the last bit so every value sits inside
    # a plateau of the extractor rather than on its edge
    codes = np.array([bit_encode(row) for row in bits]) + 2.0 ** -(L + 2)
    samples = [(m, codes[m]) for m in range(M)] + [(M, codes[-1])]
    enc = _encoder(samples, N, L)
    front = stack_parallel([select_inputs(enc, [0], 2), relu_carrier(enc.depth, 2, 1)],
                           nonneg=[True, True])
    front = postcompose_affine(front, np.eye(2), [0.0, 1.0])
    net = compose_serial(front, bit_extract_net(L))
    return _tag(net, "bit_sum_net", "bit prefix sums", N=N, L=L)


# -------------------------------------------------------- tolerance fitting

@dataclass(frozen=True)
class SampleSequence:
    values: np.ndarray
    step_bound: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", v)
        if v.size == 0:
            raise ArgumentError("empty sample sequence")
        if np.any(v < 0):
            raise ArgumentError("sample values must be nonnegative")
        if not (self.step_bound > 0):
            raise ArgumentError("step bound must be positive")
        if v.size > 1 and np.max(np.abs(np.diff(v))) > self.step_bound * (1 + 1e-12):
            raise ArgumentError("consecutive differences exceed the step bound")


def _quantize(y, eps):
    """Floor levels a = floor(y/eps) with unit steps along each row."""
    a = np.floor(y / eps).astype(np.int64)
    for l in range(1, a.shape[1]):
        a[:, l] = a[:, l - 1] + np.clip(a[:, l] - a[:, l - 1], -1, 1)
    return np.maximum(a, 0)


def _clamp_net(upper: float) -> ReluNetwork:
    """t -> min(relu(t), upper), depth 2."""
    r = ReluNetwork(1, ((np.ones((1, 1)), np.zeros(1)), (np.ones((1, 1)), np.zeros(1))), {})
    return compose_serial(r, precompose_affine(gadget_min2(), [[1.0], [0.0]], [0.0, upper]))


def grid_fit_net(y, eps: float, N: int, L: int) -> ReluNetwork:
    """Network (m, l) -> value within eps of y[m, l] on the grid, with range
    [0, max y] everywhere."""
    y = np.asarray(y, dtype=np.float64)
    N, L = int(N), int(L)
    M = N * N * L
    if y.shape != (M, L):
        raise ArgumentError(f"y must have shape ({M}, {L}), got {y.shape}")
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if np.any(y < 0):
        raise ArgumentError("y must be nonnegative")
    if L > 1 and np.max(np.abs(np.diff(y, axis=1))) > eps * (1 + 1e-12):
        raise ArgumentError("step bound violated: |y[m,l] - y[m,l-1]| > eps")
    a = _quantize(y, eps)
    step = np.diff(a, axis=1)
    up = np.zeros((M, L), dtype=int)
    down = np.zeros((M, L), dtype=int)
    up[:, 1:] = step == 1
    down[:, 1:] = step == -1
    base_samples = [(m, float(a[m, 0])) for m in range(M)] + [(M, float(a[-1, 0]))]
    base = _encoder(base_samples, N, L)
    parts = [select_inputs(base, [0], 2), bit_sum_net(up, N, L), bit_sum_net(down, N, L)]
    combo = stack_parallel(parts, nonneg=[True, True, True])
    combo = postcompose_affine(combo, [[eps, eps, -eps]])
    ymax = float(y.max())
    net = compose_serial(combo, _clamp_net(ymax))
    return _tag(net, "grid_fit_net", "grid tolerance fitting", N=N, L=L, eps=float(eps).hex())


def point_fit_net(samples: SampleSequence, eps: float, N: int, L: int) -> ReluNetwork:
    """Scalar network with |net(j) - y_j| <= eps at j = 0..J-1 and range
    [0, max y] on the whole real line."""
    if not isinstance(samples, SampleSequence):
        samples = SampleSequence(samples, eps)
    y = samples.values
    N, L = int(N), int(L)
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if y.size > 1 and np.max(np.abs(np.diff(y))) > eps * (1 + 1e-12):
        raise ArgumentError("step bound violated")
    J = y.size
    if J > N * N * L * L:
        raise CapacityError(f"J = {J} samples exceed N^2 L^2 = {N * N * L * L}")
    if J == 1:
        return _tag(constant_net(float(y[0])), "point_fit_net", "tolerance point fitting", J=1)
    M = N * N * L
    padded = np.concatenate([y, np.full(M * L - J, y[-1])])
    grid = grid_fit_net(padded.reshape(M, L), eps, N, L)
    # j -> m on [mL, mL + L - 1]
    right = max(L - 1, 0.5)
    pts = []
    for m in range(M):
        pts += [(m * L, m), (m * L + right, m)]
    pts.append((M * L, M - 1))
    split = deep_fit(pts, N, 2 * N * L - 1, 4 * N, L)
    front = stack_parallel([split, relu_carrier(split.depth)], nonneg=[True, True])
    front = postcompose_affine(front, [[1.0, 0.0], [-float(L), 1.0]])
    net = compose_serial(front, grid)
    return _tag(net, "point_fit_net", "tolerance point fitting", N=N, L=L, J=J, eps=float(eps).hex())
