"""Dense Q-networks on plain numpy: forward pass, analytic gradients, Adam.

The networks are deliberately small MLPs (flattened binary grid -> two ReLU
hidden layers -> linear Q head) so exact gradients stay cheap to compute and
cheap to verify against finite differences.  Everything is expressed as pure
array math on explicit parameter structs; there is no autograd and no hidden
state beyond the optimizer moments, which keeps runs bit-reproducible for a
fixed seed on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "NetParams",
    "AdamState",
    "Gradients",
    "init_params",
    "forward",
    "gradient",
    "init_adam",
    "apply_update",
    "clone_params",
    "copy_into",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class NetParams:
    """Parameters of one MLP.

    ``weights[k]`` has shape ``(sizes[k], sizes[k+1])`` and ``biases[k]``
    shape ``(sizes[k+1],)``.  All hidden layers use ReLU; the output layer
    is linear.
    """

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def ravel(self) -> np.ndarray:
        """All parameters as one flat vector (weights then bias per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


@dataclass
class Gradients:
    """Per-layer gradients plus the scalar loss they were taken at."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    loss: float


@dataclass
class AdamState:
    """Adam moments and step counter for one NetParams."""

    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]


def _check_sizes(sizes: tuple[int, ...]) -> None:
    if len(sizes) < 2:
        raise ConfigurationError(f"need input and output layer, got sizes={sizes!r}")
    if any(int(s) < 1 for s in sizes):
        raise ConfigurationError(f"layer sizes must be positive, got {sizes!r}")


def init_params(
    sizes: tuple[int, ...], rng: np.random.Generator, dtype=np.float64
) -> NetParams:
    """Fresh parameters: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    sizes = tuple(int(s) for s in sizes)
    _check_sizes(sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        biases.append(rng.uniform(-bound, bound, size=fan_out).astype(dtype))
    return NetParams(sizes=sizes, weights=weights, biases=biases)


def forward(params: NetParams, obs: np.ndarray) -> np.ndarray:
    """Q-values for a batch of flattened observations.

    ``obs`` is (batch, sizes[0]); a single flat observation of shape
    (sizes[0],) is also accepted and returns shape (sizes[-1],).
    """
    single = obs.ndim == 1
    h = obs[None, :] if single else obs
    if h.shape[1] != params.sizes[0]:
        raise ConfigurationError(
            f"observation width {h.shape[1]} != input layer {params.sizes[0]}"
        )
    last = params.n_layers - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if k != last:
            np.maximum(h, 0.0, out=h)
    return h[0] if single else h


def _forward_cached(params: NetParams, obs: np.ndarray) -> list[np.ndarray]:
    """Forward pass keeping every post-activation, for backprop.

    Returns [obs, h1, ..., q] where hidden entries are post-ReLU.
    """
    acts = [obs]
    last = params.n_layers - 1
    h = obs
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if k != last:
            np.maximum(h, 0.0, out=h)
        acts.append(h)
    return acts


def gradient(
    params: NetParams,
    obs: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
) -> Gradients:
    """Exact gradient of the action-restricted MSE loss.

        L = mean_b (Q(s_b, a_b) - y_b)^2

    Only the output units selected by ``actions`` receive error signal;
    the rest of the Q head contributes nothing, as in standard TD updates.
    """
    batch = obs.shape[0]
    acts = _forward_cached(params, obs)
    q = acts[-1]
    picked = q[np.arange(batch), actions]
    err = picked - targets
    loss = float(np.mean(err * err))

    # dL/dq is zero except at the chosen action of each row.
    delta = np.zeros_like(q)
    delta[np.arange(batch), actions] = 2.0 * err / batch

    g_w: list[np.ndarray] = [None] * params.n_layers  # type: ignore[list-item]
    g_b: list[np.ndarray] = [None] * params.n_layers  # type: ignore[list-item]
    for k in range(params.n_layers - 1, -1, -1):
        g_w[k] = acts[k].T @ delta
        g_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ params.weights[k].T
            # ReLU gate: units that were clipped to zero pass no gradient.
            delta *= acts[k] > 0
    return Gradients(weights=g_w, biases=g_b, loss=loss)


def init_adam(
    params: NetParams,
    lr: float = 0.00025,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 0.0003125,
) -> AdamState:
    zeros = lambda a: np.zeros_like(a)
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step=0,
        m_w=[zeros(w) for w in params.weights],
        v_w=[zeros(w) for w in params.weights],
        m_b=[zeros(b) for b in params.biases],
        v_b=[zeros(b) for b in params.biases],
    )


def apply_update(params: NetParams, state: AdamState, grads: Gradients) -> None:
    """One Adam step, in place.

        m <- b1*m + (1-b1)*g        m_hat = m / (1 - b1^t)
        v <- b2*v + (1-b2)*g^2      v_hat = v / (1 - b2^t)
        theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

    A zero gradient leaves both moments and parameters exactly unchanged.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for k in range(params.n_layers):
        for theta, g, m, v in (
            (params.weights[k], grads.weights[k], state.m_w[k], state.v_w[k]),
            (params.biases[k], grads.biases[k], state.m_b[k], state.v_b[k]),
        ):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            theta -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def clone_params(params: NetParams) -> NetParams:
    """Deep copy, used to spawn target networks."""
    return NetParams(
        sizes=params.sizes,
        weights=[w.copy() for w in params.weights],
        biases=[b.copy() for b in params.biases],
    )


def copy_into(dst: NetParams, src: NetParams) -> None:
    """Overwrite dst's arrays with src's values (target sync without realloc)."""
    if dst.sizes != src.sizes:
        raise ConfigurationError(f"topology mismatch: {dst.sizes} vs {src.sizes}")
    for d, s in zip(dst.weights, src.weights):
        d[...] = s
    for d, s in zip(dst.biases, src.biases):
        d[...] = s


def save_checkpoint(path, members: list[NetParams]) -> None:
    """Write an ensemble of networks to one .npz file.

    Layout: ``sizes`` (shared topology) plus ``w{i}_{k}`` / ``b{i}_{k}``
    per member i and layer k, and a member count.
    """
    arrays: dict[str, np.ndarray] = {
        "n_members": np.array(len(members), dtype=np.int64),
        "sizes": np.array(members[0].sizes, dtype=np.int64),
    }
    for i, p in enumerate(members):
        if p.sizes != members[0].sizes:
            raise ConfigurationError("ensemble members must share one topology")
        for k in range(p.n_layers):
            arrays[f"w{i}_{k}"] = p.weights[k]
            arrays[f"b{i}_{k}"] = p.biases[k]
    np.savez(path, **arrays)


def load_checkpoint(path) -> list[NetParams]:
    """Inverse of save_checkpoint; validates the topology header."""
    with np.load(path) as data:
        if "n_members" not in data or "sizes" not in data:
            raise ConfigurationError(f"{path}: not an ensemble checkpoint")
        n = int(data["n_members"])
        sizes = tuple(int(s) for s in data["sizes"])
        _check_sizes(sizes)
        members = []
        for i in range(n):
            weights, biases = [], []
            for k in range(len(sizes) - 1):
                w = data[f"w{i}_{k}"]
                b = data[f"b{i}_{k}"]
                if w.shape != (sizes[k], sizes[k + 1]) or b.shape != (sizes[k + 1],):
                    raise ConfigurationError(
                        f"{path}: layer {k} of member {i} does not match header {sizes}"
                    )
                weights.append(w)
                biases.append(b)
            members.append(NetParams(sizes=sizes, weights=weights, biases=biases))
    return members
