"""Minimal feed-forward network kernel: forward with cache, exact backprop,
Adam/SGD updates, and a versioned text serialization of parameters.

Everything is float64 numpy so finite-difference checks are meaningful.
Parameters are treated as immutable: the optimizer returns fresh arrays.
"""

import base64
import json
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "softmax", "identity")

# sigmoid saturates exactly in float64 beyond |z| ~ 37; clamp keeps exp() safe
_SIGMOID_CLIP = 40.0

_FORMAT_NAME = "teammoe-mlp"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Layer:
    w: np.ndarray           # (out, in)
    b: np.ndarray           # (out,)
    activation: str


@dataclass(frozen=True)
class MlpParams:
    layers: tuple

    @property
    def in_width(self) -> int:
        return self.layers[0].w.shape[1]

    @property
    def out_width(self) -> int:
        return self.layers[-1].w.shape[0]


@dataclass(frozen=True)
class ForwardCache:
    x: np.ndarray           # input batch (n, in)
    pre: tuple              # per-layer pre-activations z
    post: tuple             # per-layer post-activations a


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    rule: str = "adam"      # "adam" or "sgd"
    step: int = 0
    m: list = field(default_factory=list)   # first-moment (mw, mb) per layer
    v: list = field(default_factory=list)   # second-moment (vw, vb) per layer


def init_mlp(layer_sizes, activations, rng: np.random.Generator) -> MlpParams:
    """Fan-in-scaled uniform weights (He-style for relu, Glorot otherwise), zero biases."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least one layer (two size entries)")
    if len(activations) != len(layer_sizes) - 1:
        raise ValueError(f"{len(layer_sizes) - 1} layers but {len(activations)} activations")
    layers = []
    for li, act in enumerate(activations):
        if act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
        if act == "softmax" and li != len(activations) - 1:
            raise ValueError("softmax is only supported as the final activation")
        fan_in, fan_out = layer_sizes[li], layer_sizes[li + 1]
        if act == "relu":
            bound = np.sqrt(6.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(w=w, b=np.zeros(fan_out), activation=act))
    return MlpParams(layers=tuple(layers))


def _apply_activation(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "sigmoid":
        return 1.0 / (1.0 + np.exp(-np.clip(z, -_SIGMOID_CLIP, _SIGMOID_CLIP)))
    if act == "softmax":
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    return z


def forward(m: MlpParams, x: np.ndarray):
    """Affine-then-activation composition over a (n, in) batch.

    Returns (output, cache); the cache feeds :func:`backward`.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != m.in_width:
        raise ValueError(f"input batch must be (n, {m.in_width}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input batch must be finite")
    a = x
    pre, post = [], []
    for layer in m.layers:
        z = a @ layer.w.T + layer.b
        a = _apply_activation(z, layer.activation)
        pre.append(z)
        post.append(a)
    return a, ForwardCache(x=x, pre=tuple(pre), post=tuple(post))


def backward(m: MlpParams, cache: ForwardCache, d_out: np.ndarray):
    """Exact reverse-mode gradients.

    ``d_out`` is dLoss/dOutput for the batch; returns (grads, dLoss/dInput)
    where grads is a list of (dW, db) summed over the batch. Softmax layers
    apply the full Jacobian, so any scalar loss of the softmax output works.
    """
    d_out = np.asarray(d_out, dtype=np.float64)
    if d_out.shape != cache.post[-1].shape:
        raise ValueError(f"upstream gradient shape {d_out.shape} does not match "
                         f"output shape {cache.post[-1].shape}")
    grads = [None] * len(m.layers)
    da = d_out
    for li in range(len(m.layers) - 1, -1, -1):
        layer = m.layers[li]
        a = cache.post[li]
        if layer.activation == "relu":
            dz = da * (cache.pre[li] > 0)
        elif layer.activation == "sigmoid":
            dz = da * a * (1.0 - a)
        elif layer.activation == "softmax":
            dz = a * (da - (da * a).sum(axis=1, keepdims=True))
        else:
            dz = da
        a_prev = cache.post[li - 1] if li > 0 else cache.x
        grads[li] = (dz.T @ a_prev, dz.sum(axis=0))
        da = dz @ layer.w
    return grads, da


def init_optimizer(m: MlpParams, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8,
                   rule: str = "adam") -> OptimizerState:
    if rule not in ("adam", "sgd"):
        raise ValueError(f"unknown optimizer rule {rule!r}")
    zeros = lambda: [(np.zeros_like(l.w), np.zeros_like(l.b)) for l in m.layers]
    return OptimizerState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, rule=rule,
                          step=0, m=zeros(), v=zeros())


def optimizer_step(m: MlpParams, grads, st: OptimizerState, direction: str):
    """One first-order update with the given sign; returns (params, state).

    ``ascend`` on an objective is bit-identical to ``descend`` on its negation:
    the gradient is negated up front and a single descent rule runs after that.
    Non-finite gradients are rejected with the parameters untouched.
    """
    if direction not in ("ascend", "descend"):
        raise ValueError(f"direction must be 'ascend' or 'descend', got {direction!r}")
    for dw, db in grads:
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise ValueError("non-finite gradient; step rejected")
    sign = -1.0 if direction == "ascend" else 1.0
    t = st.step + 1
    new_layers, new_m, new_v = [], [], []
    for layer, (dw, db), (mw, mb), (vw, vb) in zip(m.layers, grads, st.m, st.v):
        gw, gb = sign * dw, sign * db
        if st.rule == "sgd":
            new_layers.append(Layer(w=layer.w - st.lr * gw, b=layer.b - st.lr * gb,
                                    activation=layer.activation))
            new_m.append((mw, mb))
            new_v.append((vw, vb))
            continue
        mw = st.beta1 * mw + (1.0 - st.beta1) * gw
        mb = st.beta1 * mb + (1.0 - st.beta1) * gb
        vw = st.beta2 * vw + (1.0 - st.beta2) * gw ** 2
        vb = st.beta2 * vb + (1.0 - st.beta2) * gb ** 2
        c1 = 1.0 - st.beta1 ** t
        c2 = 1.0 - st.beta2 ** t
        w = layer.w - st.lr * (mw / c1) / (np.sqrt(vw / c2) + st.eps)
        b = layer.b - st.lr * (mb / c1) / (np.sqrt(vb / c2) + st.eps)
        new_layers.append(Layer(w=w, b=b, activation=layer.activation))
        new_m.append((mw, mb))
        new_v.append((vw, vb))
    new_state = OptimizerState(lr=st.lr, beta1=st.beta1, beta2=st.beta2, eps=st.eps,
                               rule=st.rule, step=t, m=new_m, v=new_v)
    return MlpParams(layers=tuple(new_layers)), new_state


# --- parameter serialization -------------------------------------------------

def _encode_array(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode_array(s: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").reshape(shape).copy()


def mlp_to_dict(m: MlpParams) -> dict:
    return {
        "format": _FORMAT_NAME,
        "version": _FORMAT_VERSION,
        "layers": [
            {
                "activation": l.activation,
                "in": int(l.w.shape[1]),
                "out": int(l.w.shape[0]),
                "w": _encode_array(l.w),
                "b": _encode_array(l.b),
            }
            for l in m.layers
        ],
    }


def mlp_from_dict(d: dict) -> MlpParams:
    if d.get("format") != _FORMAT_NAME:
        raise ValueError(f"not a {_FORMAT_NAME} document")
    if d.get("version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported format version {d.get('version')!r}")
    layers = tuple(
        Layer(w=_decode_array(ld["w"], (ld["out"], ld["in"])),
              b=_decode_array(ld["b"], (ld["out"],)),
              activation=ld["activation"])
        for ld in d["layers"]
    )
    return MlpParams(layers=layers)


def dumps_mlp(m: MlpParams) -> str:
    """Deterministic text form: write -> read -> write is byte-identical."""
    return json.dumps(mlp_to_dict(m), sort_keys=True, separators=(",", ":"))


def loads_mlp(s: str) -> MlpParams:
    return mlp_from_dict(json.loads(s))


def save_mlp(m: MlpParams, path) -> None:
    with open(path, "w") as f:
        f.write(dumps_mlp(m))


def load_mlp(path) -> MlpParams:
    with open(path) as f:
        return loads_mlp(f.read())
