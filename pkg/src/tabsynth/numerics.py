"""Dense MLP forward/backward, Adam, gradient clipping and a seeded RNG.

Everything here works on float64 numpy arrays. A "matrix" is a 2-D array
with one sample per row; network weights are stored ``(out, in)``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

HIDDEN_SLOPE = 0.2
OUTPUT_ACTIVATIONS = ("tanh", "sigmoid", "linear", "softmax")


class NumericError(FloatingPointError):
    """A non-finite value reached an optimizer update."""


# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------

class SeededRng:
    """PCG64 stream with explicit uniform and Box-Muller Gaussian draws.

    Uniforms take the top 53 bits of each raw 64-bit PCG64 output, so a
    given seed yields the same stream on any platform and any numpy
    version that ships PCG64 (the raw output is fixed by the algorithm).
    Gaussians are produced in pairs by Box-Muller from two uniforms.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._bitgen = np.random.PCG64(self.seed)

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(int(n))

    def uniform(self, size=None, low=0.0, high=1.0):
        """Uniform draws on ``[low, high)``."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        u = low + (high - low) * u
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None, loc=0.0, scale=1.0):
        n = 1 if size is None else int(np.prod(size))
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        # 1 - u lies in (0, 1], keeping the log finite
        r = np.sqrt(-2.0 * np.log(1.0 - u[:m]))
        theta = 2.0 * np.pi * u[m:]
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        z = loc + scale * z[:n]
        return float(z[0]) if size is None else z.reshape(size)

    def integers(self, high: int, size=None):
        """Integers on ``[0, high)``."""
        n = 1 if size is None else int(np.prod(size))
        v = np.floor(self.uniform(n) * high).astype(np.int64)
        v = np.minimum(v, high - 1)
        return int(v[0]) if size is None else v.reshape(size)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation (stable argsort of uniform keys)."""
        return np.argsort(self.uniform(int(n)), kind="stable")

    def spawn(self, label: str) -> "SeededRng":
        """Child stream whose seed depends only on this seed and ``label``."""
        return SeededRng(derive_seed(self.seed, label))


def derive_seed(seed: int, label: str) -> int:
    """Deterministic 64-bit subseed: first 8 bytes of sha256("seed:label")."""
    digest = hashlib.sha256(f"{int(seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# Multilayer perceptron
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple
    output_activation: str = "linear"
    hidden_slope: float = HIDDEN_SLOPE

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"invalid layer sizes {self.layer_sizes!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if not 0.0 <= self.hidden_slope < 1.0:
            raise ValueError("hidden_slope must lie in [0, 1)")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1


@dataclass
class MlpParams:
    weights: list
    biases: list

    def arrays(self) -> list:
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def check(self, spec: MlpSpec):
        if len(self.weights) != spec.n_layers or len(self.biases) != spec.n_layers:
            raise ValueError("parameter count does not match layer sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (spec.layer_sizes[i + 1], spec.layer_sizes[i])
            if w.shape != expect or b.shape != (expect[0],):
                raise ValueError(f"layer {i}: weight {w.shape}/bias {b.shape}, expected {expect}")


def init_mlp(spec: MlpSpec, rng: SeededRng) -> MlpParams:
    """He-style uniform init for leaky-ReLU layers, zero biases."""
    weights, biases = [], []
    for n_in, n_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = np.sqrt(6.0 / ((1.0 + spec.hidden_slope**2) * n_in))
        weights.append(rng.uniform((n_out, n_in), -bound, bound))
        biases.append(np.zeros(n_out))
    return MlpParams(weights, biases)


def _leaky(a, slope):
    # valid for 0 <= slope < 1
    return np.maximum(a, slope * a)


def sigmoid(a):
    """Logistic function, evaluated without overflow for large |a|."""
    a = np.asarray(a, dtype=np.float64)
    e = np.exp(-np.abs(a))
    return np.where(a >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softplus(a):
    """log(1 + exp(a)), stable for large |a|."""
    a = np.asarray(a, dtype=np.float64)
    return np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))


def _softmax(a):
    z = a - a.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _output(a, kind):
    if kind == "tanh":
        return np.tanh(a)
    if kind == "sigmoid":
        return sigmoid(a)
    if kind == "softmax":
        return _softmax(a)
    return a


@dataclass
class ForwardCache:
    """Per-layer inputs and pre-activations from one forward pass."""
    params_id: int
    inputs: list = field(default_factory=list)   # h_{l-1}, one per layer
    pre: list = field(default_factory=list)      # a_l
    output: np.ndarray | None = None

    @property
    def hidden(self) -> list:
        """Post-activation outputs of the hidden layers."""
        return self.inputs[1:]


def mlp_forward(params: MlpParams, spec: MlpSpec, x):
    """Run ``x`` (n, in) through the network; returns ``(output, cache)``."""
    h = np.asarray(x, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != spec.layer_sizes[0]:
        raise ValueError(
            f"layer 0 expects input width {spec.layer_sizes[0]}, got shape {h.shape}"
        )
    cache = ForwardCache(id(params))
    last = spec.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        if w.shape[1] != h.shape[1]:
            raise ValueError(f"layer {i} expects width {w.shape[1]}, got {h.shape[1]}")
        cache.inputs.append(h)
        a = h @ w.T + b
        cache.pre.append(a)
        h = _output(a, spec.output_activation) if i == last else _leaky(a, spec.hidden_slope)
    cache.output = h
    return h, cache


def mlp_backward(params: MlpParams, spec: MlpSpec, cache: ForwardCache, output_grad,
                 hidden_grads=None):
    """Backpropagate ``output_grad`` (dL/d output) through a cached forward pass.

    ``hidden_grads`` optionally maps a hidden-layer index ``k`` (0-based, the
    output of layer ``k``) to an extra dL/dh_k, which is how a loss on an
    intermediate embedding enters. Returns ``(grads, input_grad)`` with
    ``grads`` an :class:`MlpParams` of matching shapes.
    """
    if cache.params_id != id(params) or len(cache.pre) != spec.n_layers:
        raise ValueError("cache was not produced by a forward pass of these parameters")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != cache.output.shape:
        raise ValueError(f"output_grad shape {g.shape} != output shape {cache.output.shape}")
    hidden_grads = hidden_grads or {}
    last = spec.n_layers - 1
    kind = spec.output_activation
    out = cache.output
    if kind == "tanh":
        delta = g * (1.0 - out**2)
    elif kind == "sigmoid":
        delta = g * out * (1.0 - out)
    elif kind == "softmax":
        delta = out * (g - np.sum(g * out, axis=1, keepdims=True))
    else:
        delta = g
    gw = [None] * spec.n_layers
    gb = [None] * spec.n_layers
    for i in range(last, -1, -1):
        gw[i] = delta.T @ cache.inputs[i]
        gb[i] = delta.sum(axis=0)
        gh = delta @ params.weights[i]
        if i == 0:
            return MlpParams(gw, gb), gh
        if i - 1 in hidden_grads:
            gh = gh + hidden_grads[i - 1]
        delta = gh * np.where(cache.pre[i - 1] > 0, 1.0, spec.hidden_slope)


def input_gradient_penalty(params: MlpParams, spec: MlpSpec, x, n_penalized: int, weight: float):
    """Gradient-norm penalty of a scalar-output network and its parameter gradient.

    For each row of ``x`` the gradient g of the (linear) scalar output with
    respect to the first ``n_penalized`` input columns is formed; the value is
    ``weight * mean((||g|| - 1)^2)``. Returns ``(value, grads, norms)``.

    With piecewise-linear hidden units the input gradient is linear in every
    weight matrix, so its parameter derivative is a forward pass of the
    linearised network seeded with dP/dg. Biases receive no gradient.
    """
    if spec.layer_sizes[-1] != 1 or spec.output_activation != "linear":
        raise ValueError("gradient penalty needs a linear scalar output")
    _, cache = mlp_forward(params, spec, x)
    n = cache.inputs[0].shape[0]
    slopes = [np.where(a > 0, 1.0, spec.hidden_slope) for a in cache.pre[:-1]]
    # backward pass of d out / d x, keeping every layer's delta
    deltas = [None] * spec.n_layers
    delta = np.ones((n, 1))
    for i in range(spec.n_layers - 1, -1, -1):
        deltas[i] = delta
        gh = delta @ params.weights[i]
        if i > 0:
            delta = gh * slopes[i - 1]
    gx = gh[:, :n_penalized]
    norms = np.sqrt(np.sum(gx**2, axis=1))
    value = weight * float(np.mean((norms - 1.0) ** 2))
    safe = np.where(norms > 0, norms, 1.0)
    coef = np.where(norms > 0, weight * 2.0 * (norms - 1.0) / (n * safe), 0.0)
    psi = np.zeros_like(cache.inputs[0])
    psi[:, :n_penalized] = coef[:, None] * gx
    gw, gb = [], []
    for i, w in enumerate(params.weights):
        gw.append(deltas[i].T @ psi)
        gb.append(np.zeros(w.shape[0]))
        if i < spec.n_layers - 1:
            psi = (psi @ w.T) * slopes[i]
    return value, MlpParams(gw, gb), norms


# ---------------------------------------------------------------------------
# Optimisation
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list | None = None
    v: list | None = None


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState) -> None:
    """One bias-corrected Adam update, applied in place to ``params``."""
    p_list, g_list = params.arrays(), grads.arrays()
    for g in g_list:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient entry")
    if state.m is None:
        state.m = [np.zeros_like(p) for p in p_list]
        state.v = [np.zeros_like(p) for p in p_list]
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for p, g, m, v in zip(p_list, g_list, state.m, state.v):
        if m.shape != p.shape or g.shape != p.shape:
            raise ValueError("optimizer state does not match parameter shapes")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def global_norm(grads: MlpParams) -> float:
    return float(np.sqrt(sum(np.sum(g * g) for g in grads.arrays())))


def clip_gradients(grads: MlpParams, gamma: float) -> MlpParams:
    """Rescale all gradients together so their global L2 norm is at most ``gamma``."""
    if gamma <= 0:
        raise ValueError("clip threshold must be positive")
    norm = global_norm(grads)
    if norm <= gamma:
        return grads
    s = gamma / norm
    return MlpParams([w * s for w in grads.weights], [b * s for b in grads.biases])


def finite_diff_gradient(loss_fn, params, h: float = 1e-5):
    """Central-difference gradient of ``loss_fn(params)``, one entry at a time.

    ``params`` is an :class:`MlpParams` or a float ndarray; it is perturbed in
    place and restored. The result has the same type and shapes.
    """
    if isinstance(params, MlpParams):
        grads = MlpParams([np.zeros_like(w) for w in params.weights],
                          [np.zeros_like(b) for b in params.biases])
        pairs = zip(params.arrays(), grads.arrays())
    else:
        grads = np.zeros_like(params, dtype=np.float64)
        pairs = [(params, grads)]
    for p, g in pairs:
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            up = loss_fn(params)
            flat[k] = old - h
            down = loss_fn(params)
            flat[k] = old
            gflat[k] = (up - down) / (2.0 * h)
    return grads


def max_relative_error(a: MlpParams | np.ndarray, b: MlpParams | np.ndarray, floor: float = 1e-6) -> float:
    """max |a-b| / max(|a|, |b|, floor) over all entries."""
    if isinstance(a, MlpParams):
        a = np.concatenate([x.ravel() for x in a.arrays()])
        b = np.concatenate([x.ravel() for x in b.arrays()])
    a, b = np.asarray(a, float).ravel(), np.asarray(b, float).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
