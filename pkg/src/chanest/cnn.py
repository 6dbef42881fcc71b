"""Learned estimator: two 2D-circular-convolution layers around a pointwise
or softmax activation, trained on simulated observations with Adam.

The fast estimator is one point of this function class (first kernel = its
flipped spectral kernel, first bias = its scalar bias, second kernel = the
spectral kernel, softmax activation); training unties these parameters.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ScenarioConfig, draw_batch
from .numerics import circ_conv2, flip_kernel, softmax
from .pilots import PilotSet, SpectralTransform, dft_pilots
from .structure import apply_diag_filter, fe_input

ACTIVATIONS = ("relu", "softmax")


@dataclass
class CnnParams:
    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        for name in ("a1", "b1", "a2", "b2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name} contains non-finite entries")
            object.__setattr__(self, name, arr)

    def as_dict(self) -> dict:
        return {"a1": self.a1, "b1": self.b1, "a2": self.a2, "b2": self.b2}

    def replace(self, values: dict) -> "CnnParams":
        return CnnParams(values["a1"], values["b1"], values["a2"], values["b2"],
                         self.activation)


@dataclass
class TrainConfig:
    epochs: int = 250
    batches_per_epoch: int = 40
    batch_size: int = 20
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    l2_lambda: float = 1e-5
    init_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batches_per_epoch, self.batch_size) < 1:
            raise ValueError("epochs, batches and batch size must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")


def desk_scale_train_config(**overrides) -> TrainConfig:
    """Reduced-epoch preset for desk-scale runs."""
    base = {"epochs": 100}
    base.update(overrides)
    return TrainConfig(**base)


@dataclass
class Sample:
    y: np.ndarray
    h: np.ndarray
    sigma2: float


def _truncated_normal(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    """Normal draws rejected outside two standard deviations."""
    out = rng.standard_normal(shape)
    bad = np.abs(out) > 2.0
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > 2.0
    return std * out


def init_params(S: int, U: int, activation: str, std: float,
                rng: np.random.Generator) -> CnnParams:
    su = S * U
    return CnnParams(
        a1=_truncated_normal(rng, su, std),
        b1=np.zeros(su),
        a2=_truncated_normal(rng, su, std),
        b2=np.zeros(su),
        activation=activation,
    )


def params_from_fe(fe, S: int, U: int) -> CnnParams:
    """Network reproducing the fast estimator exactly (softmax activation)."""
    return CnnParams(
        a1=flip_kernel(fe.w0, S, U),
        b1=np.full(S * U, fe.b0),
        a2=fe.w0.copy(),
        b2=np.zeros(S * U),
        activation="softmax",
    )


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return softmax(z, axis=-1)


def _activate_backward(grad_hidden, z, hidden, kind):
    if kind == "relu":
        return grad_hidden * (z > 0)  # subgradient 0 at the kink
    inner = np.sum(grad_hidden * hidden, axis=-1, keepdims=True)
    return hidden * (grad_hidden - inner)


def cnn_forward(params: CnnParams, chat: np.ndarray, s: int, u: int):
    """Filter vector w = a2 (*) act(a1 (*) chat + b1) + b2, with (*) the 2D
    circular convolution. Batches on leading axes of chat are supported.
    Returns (w, cache) with the intermediates needed by the backward pass."""
    z1 = circ_conv2(params.a1, chat, s, u) + params.b1
    hidden = _activate(z1, params.activation)
    w = circ_conv2(params.a2, hidden, s, u) + params.b2
    return w, (chat, z1, hidden)


def cnn_estimate(params: CnnParams, y: np.ndarray, pilots: PilotSet,
                 qt: SpectralTransform, sigma2) -> np.ndarray:
    """Channel estimate: the learned diagonal spectral filter applied to the
    spectral matched-filter output."""
    if np.ndim(sigma2) == 0:
        chat = fe_input(y, pilots, qt, float(sigma2))
    else:
        chat = fe_batch_input(y, pilots, qt, sigma2)
    w, _ = cnn_forward(params, chat, qt.S, qt.U)
    return apply_diag_filter(w, y, pilots, qt)


def fe_batch_input(y, pilots, qt, sigma2) -> np.ndarray:
    """fe_input with per-sample noise variances (sigma2 broadcast on the batch)."""
    if not pilots.is_orthogonal:
        raise ValueError("orthogonal pilots required")
    t = qt.forward(pilots.apply_adjoint(y))
    return (t.real ** 2 + t.imag ** 2) / np.asarray(sigma2)[..., None]


def cnn_backward(params: CnnParams, cache, grad_w: np.ndarray, s: int, u: int,
                 l2_lambda: float = 0.0) -> dict:
    """Gradients of a scalar loss through the two convolution layers, given
    the loss gradient with respect to the filter vector w.

    Backpropagation through a circular convolution is convolution with the
    flipped counterpart. Batched grad_w is averaged over leading axes.
    The L2 term adds 2*lambda*kernel to the kernel gradients only.
    """
    chat, z1, hidden = cache
    batch_axes = tuple(range(grad_w.ndim - 1))

    def reduce(x):
        return x.mean(axis=batch_axes) if batch_axes else x

    grad_a2 = reduce(circ_conv2(flip_kernel(hidden, s, u), grad_w, s, u))
    grad_b2 = reduce(grad_w)
    grad_hidden = circ_conv2(flip_kernel(params.a2, s, u), grad_w, s, u)
    grad_z1 = _activate_backward(grad_hidden, z1, hidden, params.activation)
    grad_a1 = reduce(circ_conv2(flip_kernel(chat, s, u), grad_z1, s, u))
    grad_b1 = reduce(grad_z1)
    if l2_lambda:
        grad_a1 = grad_a1 + 2.0 * l2_lambda * params.a1
        grad_a2 = grad_a2 + 2.0 * l2_lambda * params.a2
    return {"a1": grad_a1, "b1": grad_b1, "a2": grad_a2, "b2": grad_b2}


def loss_and_grads(params: CnnParams, y: np.ndarray, h: np.ndarray, sigma2,
                   pilots: PilotSet, qt: SpectralTransform,
                   l2_lambda: float = 0.0):
    """Mean squared estimation error over the batch plus the L2 penalty,
    with its analytic gradient. y has shape (..., S*N), h (..., S*U)."""
    s, u = qt.S, qt.U
    t = qt.forward(pilots.apply_adjoint(y))
    chat = (t.real ** 2 + t.imag ** 2) / np.asarray(sigma2)[..., None] \
        if np.ndim(sigma2) else (t.real ** 2 + t.imag ** 2) / sigma2
    w, cache = cnn_forward(params, chat, s, u)
    h_hat = qt.adjoint(w * t)
    resid = h - h_hat
    per_sample = np.sum(resid.real ** 2 + resid.imag ** 2, axis=-1)
    loss = float(np.mean(per_sample))
    if l2_lambda:
        loss += l2_lambda * float(params.a1 @ params.a1 + params.a2 @ params.a2)
    grad_w = -2.0 * np.real(np.conj(t) * qt.forward(resid))
    grads = cnn_backward(params, cache, grad_w, s, u, l2_lambda)
    return loss, grads


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def for_params(cls, params: CnnParams) -> "AdamState":
        zeros = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
        return cls(m=zeros, v={k: np.zeros_like(v) for k, v in params.as_dict().items()})


def adam_step(state: AdamState, params: dict, grads: dict, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One Adam update with bias-corrected moments; returns (state, params)."""
    t = state.t + 1
    new_m, new_v, new_p = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        new_m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        new_v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        m_hat = new_m[k] / (1.0 - beta1 ** t)
        v_hat = new_v[k] / (1.0 - beta2 ** t)
        new_p[k] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(new_m, new_v, t), new_p


def train(cfg: TrainConfig, scenario: ScenarioConfig, activation: str = "relu",
          init: str = "random", rng: np.random.Generator | None = None,
          pilots: PilotSet | None = None):
    """Train on a fresh stream of simulated observations (new cluster
    parameters for every channel realization).

    Returns the trained parameters and the per-epoch mean training error,
    normalized by S*U. Deterministic for a fixed config seed.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if pilots is None:
        pilots = dft_pilots(scenario.U, scenario.N, scenario.S)
    qt = SpectralTransform(scenario.S, scenario.U)
    su = scenario.S * scenario.U

    if init == "random":
        params = init_params(scenario.S, scenario.U, activation, cfg.init_std, rng)
    elif init == "fe":
        from .estimators import fe_reference_params
        from .channel import nominal_noise_variance
        fe = fe_reference_params(scenario.S, scenario.U, pilots, qt,
                                 nominal_noise_variance(pilots, scenario.snr_db),
                                 np.deg2rad(scenario.spread_tx_deg),
                                 np.deg2rad(scenario.spread_rx_deg))
        warm = params_from_fe(fe, scenario.S, scenario.U)
        params = CnnParams(warm.a1, warm.b1, warm.a2, warm.b2, activation)
    else:
        raise ValueError(f"unknown init {init!r}")

    state = AdamState.for_params(params)
    history = []
    for _ in range(cfg.epochs):
        epoch_nmse = 0.0
        for _ in range(cfg.batches_per_epoch):
            draws = draw_batch(scenario, pilots, rng, cfg.batch_size)
            y = np.stack([d.y for d in draws])
            h = np.stack([d.h for d in draws])
            sigma2 = np.array([d.sigma2 for d in draws])
            loss, grads = loss_and_grads(params, y, h, sigma2, pilots, qt,
                                         cfg.l2_lambda)
            if not np.isfinite(loss):
                raise ArithmeticError(
                    "training loss is non-finite; the learning rate is likely too high")
            penalty = cfg.l2_lambda * float(params.a1 @ params.a1
                                            + params.a2 @ params.a2)
            state, values = adam_step(state, params.as_dict(), grads,
                                      cfg.learning_rate, cfg.adam_beta1,
                                      cfg.adam_beta2, cfg.adam_eps)
            params = params.replace(values)
            epoch_nmse += (loss - penalty) / su
        history.append(epoch_nmse / cfg.batches_per_epoch)
    return params, history


def save_model(params: CnnParams, S: int, U: int, path) -> None:
    """Text format: header "CNNv1 S U activation", then four length-S*U
    blocks of decimals (a1, b1, a2, b2), one value per line."""
    su = S * U
    for name, arr in params.as_dict().items():
        if arr.shape != (su,):
            raise ValueError(f"{name} has shape {arr.shape}, expected ({su},)")
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"CNNv1 {S} {U} {params.activation}\n")
        for arr in (params.a1, params.b1, params.a2, params.b2):
            for value in arr:
                f.write(f"{value:.17g}\n")


def load_model(path):
    """Returns (params, S, U)."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != "CNNv1":
            raise ValueError(f"{path}: expected header 'CNNv1 S U activation'")
        s, u, activation = int(header[1]), int(header[2]), header[3]
        values = [float(line) for line in f if line.strip()]
    su = s * u
    if len(values) != 4 * su:
        raise ValueError(f"{path}: expected {4 * su} values, found {len(values)}")
    blocks = np.asarray(values).reshape(4, su)
    return CnnParams(blocks[0], blocks[1], blocks[2], blocks[3], activation), s, u
