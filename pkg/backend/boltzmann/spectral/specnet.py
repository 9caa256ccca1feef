"""
The trainable separable spectral operator.

    Q^nn_k = sum_t gamma_t(k) ((alpha_t f) * (beta_t f))_k

Parameters live on the truncated band {-N_trun, ..., N_trun - 1}^d in FFT
order of a (2 N_trun)^d grid and are zero-padded onto any grid with
N >= 2 N_trun, so the same parameters evaluate at every resolution.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import codec
from .exceptions import ContractError, NumericalError
from .grid import (
    SpectralField,
    VelocityGrid,
    embed_modes,
    get_fft_backend,
    restrict_modes,
)
from .kernel import SeparableKernel

logger = logging.getLogger(__name__)

PARAM_NAMES = ("alpha", "beta", "gamma")


@dataclass
class SpecNetParams:
    d: int
    n_trun: int
    M: int
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        expected = (self.M,) + (2 * self.n_trun,) * self.d
        for name in PARAM_NAMES:
            value = np.asarray(getattr(self, name), dtype=complex)
            if value.shape != expected:
                raise ContractError(f"{name} has shape {value.shape}, expected {expected}")
            setattr(self, name, value)

    @property
    def band_shape(self):
        return (2 * self.n_trun,) * self.d

    @property
    def n_complex_params(self) -> int:
        return 3 * self.M * (2 * self.n_trun) ** self.d

    @property
    def n_real_params(self) -> int:
        return 2 * self.n_complex_params

    def arrays(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **arrays) -> "SpecNetParams":
        values = {**self.arrays(), **arrays}
        return SpecNetParams(self.d, self.n_trun, self.M, **values)

    def copy(self) -> "SpecNetParams":
        return self.replace(**{k: v.copy() for k, v in self.arrays().items()})

    @classmethod
    def initialize(cls, d: int, n_trun: int, M: int, seed: int = 0) -> "SpecNetParams":
        """Real and imaginary parts i.i.d. uniform in [-s, s], s = (2 N_trun)^(-d/2)"""
        if n_trun < 1 or M < 1:
            raise ContractError(f"n_trun and M must be positive, got {n_trun}, {M}")
        rng = np.random.default_rng(seed)
        shape = (M,) + (2 * n_trun,) * d
        scale = 1.0 / np.sqrt((2 * n_trun) ** d)
        arrays = {
            name: rng.uniform(-scale, scale, shape) + 1j * rng.uniform(-scale, scale, shape)
            for name in PARAM_NAMES
        }
        return cls(d, n_trun, M, **arrays)

    @classmethod
    def zeros(cls, d: int, n_trun: int, M: int) -> "SpecNetParams":
        shape = (M,) + (2 * n_trun,) * d
        return cls(d, n_trun, M, **{name: np.zeros(shape, dtype=complex) for name in PARAM_NAMES})

    @classmethod
    def from_kernel(cls, kernel: SeparableKernel, n_trun: int, terms: int = None) -> "SpecNetParams":
        """Restrict the first `terms` kernel terms (all by default) to the band"""
        terms = kernel.M_total if terms is None else terms
        alpha, beta, gamma = kernel.term_block(0, terms)
        d = kernel.grid.d
        return cls(
            d,
            n_trun,
            alpha.shape[0],
            alpha=restrict_modes(alpha, n_trun, d),
            beta=restrict_modes(beta, n_trun, d),
            gamma=restrict_modes(gamma, n_trun, d),
        )

    def require_grid(self, grid: VelocityGrid):
        if grid.d != self.d:
            raise ContractError(f"Parameters are {self.d}-dimensional, grid is {grid.d}-dimensional")
        if grid.N < 2 * self.n_trun:
            raise ContractError(
                f"Grid N={grid.N} is smaller than the parameter band 2*N_trun={2 * self.n_trun}"
            )

    def embedded(self, grid: VelocityGrid) -> SeparableKernel:
        self.require_grid(grid)
        return SeparableKernel(
            grid,
            embed_modes(self.alpha, grid.N, self.d),
            embed_modes(self.beta, grid.N, self.d),
            embed_modes(self.gamma, grid.N, self.d),
            meta={"source": "specnet", "N_trun": self.n_trun, "M": self.M},
        )


@dataclass
class ParamGrads:
    """Wirtinger gradients dL/d(conj p), shaped like the parameters"""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def arrays(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.arrays().values())


@dataclass
class OptimizerState:
    """Adam moments; real and imaginary parts are independent coordinates"""

    lr: float = 1e-2
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def create(cls, params: SpecNetParams, lr=1e-2, betas=(0.9, 0.999), eps=1e-8) -> "OptimizerState":
        shape = params.alpha.shape
        return cls(
            lr=lr,
            betas=tuple(betas),
            eps=eps,
            step=0,
            m={name: np.zeros(shape, dtype=complex) for name in PARAM_NAMES},
            v={name: np.zeros(shape, dtype=complex) for name in PARAM_NAMES},
        )

    def copy(self) -> "OptimizerState":
        return OptimizerState(
            lr=self.lr,
            betas=self.betas,
            eps=self.eps,
            step=self.step,
            m={k: v.copy() for k, v in self.m.items()},
            v={k: v.copy() for k, v in self.v.items()},
        )


@dataclass
class TrainOptions:
    epochs: int = 200_000
    lr: float = 1e-2
    tol: float = 1e-2
    seed: int = 0
    batch_size: int = None
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    val_fraction: float = 0.1
    val_every: int = 100
    checkpoint_every: int = 1000
    divergence: float = 1e3


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    val_epochs: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    stop_reason: str = None
    start_epoch: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    @property
    def final_loss(self) -> float:
        return self.train_loss[-1] if self.train_loss else float("nan")

    def to_frame(self) -> pd.DataFrame:
        epochs = np.arange(self.start_epoch, self.start_epoch + self.epochs_run)
        frame = pd.DataFrame({"epoch": epochs, "train_loss": self.train_loss, "wall_time": self.wall_time})
        val = pd.Series(self.val_loss, index=self.val_epochs, dtype=float)
        frame["val_loss"] = frame["epoch"].map(val)
        return frame

    def summary(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "final_loss": self.final_loss,
            "final_val_loss": self.val_loss[-1] if self.val_loss else None,
            "stop_reason": self.stop_reason,
            "wall_time": self.wall_time[-1] if self.wall_time else 0.0,
        }


def _embedded_arrays(params: SpecNetParams, grid: VelocityGrid):
    params.require_grid(grid)
    return tuple(embed_modes(getattr(params, name), grid.N, params.d) for name in PARAM_NAMES)


def _forward_terms(fhat, alpha, beta, gamma, d):
    backend = get_fft_backend()
    f_exp = np.expand_dims(fhat, axis=-d - 1)
    a_f = alpha * f_exp
    b_f = beta * f_exp
    a_phys = backend.inverse(a_f, d)
    b_phys = backend.inverse(b_f, d)
    zeta = backend.forward(a_phys * b_phys, d)
    q = np.sum(gamma * zeta, axis=-d - 1)
    return q, a_phys, b_phys, zeta


def forward_coeffs(fhat, params: SpecNetParams, grid: VelocityGrid) -> np.ndarray:
    alpha, beta, gamma = _embedded_arrays(params, grid)
    fhat = np.asarray(fhat, dtype=complex)
    if fhat.shape[-grid.d:] != grid.shape:
        raise ContractError(f"Field of shape {fhat.shape} does not match grid {grid.shape}")
    return _forward_terms(fhat, alpha, beta, gamma, grid.d)[0]


def forward(f: SpectralField, params: SpecNetParams) -> SpectralField:
    return SpectralField(f.grid, forward_coeffs(f.coeffs, params, f.grid))


def _relative_errors(pred, target, d):
    axes = tuple(range(-d, 0))
    err = np.sqrt(np.sum(np.abs(pred - target) ** 2, axis=axes))
    ref = np.sqrt(np.sum(np.abs(target) ** 2, axis=axes))
    if np.any(ref == 0):
        raise ContractError("Relative loss is undefined for a zero-norm target")
    return err, ref


def loss(pred: SpectralField, target: SpectralField) -> float:
    """||pred - target|| / ||target|| in L2(D_T), through Parseval"""
    pred.grid.require_same(target.grid, "loss")
    err, ref = _relative_errors(pred.coeffs, target.coeffs, pred.grid.d)
    return float(err / ref)


def batch_loss(preds, targets, d: int) -> float:
    err, ref = _relative_errors(np.asarray(preds), np.asarray(targets), d)
    return float(np.mean(err / ref))


def batch_gradients(fhat, targets, params: SpecNetParams, grid: VelocityGrid):
    """
    Mean relative L2 loss over a batch and its Wirtinger gradients.

    With residual E = Q^nn - Q and w = E / (2 ||E|| ||Q||):
      dL/d(conj gamma_t) = conj(zeta_t) w
      dL/d(conj alpha_t)(l) = conj(f_l) sum_j conj(gamma_t(j)) w_j conj((beta_t f)_{j-l})
    and symmetrically for beta_t with alpha_t f.
    """
    d = grid.d
    fhat = np.asarray(fhat, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    if fhat.ndim == d:
        fhat, targets = fhat[None], targets[None]
    batch = fhat.shape[0]
    backend = get_fft_backend()

    alpha, beta, gamma = _embedded_arrays(params, grid)
    q, a_phys, b_phys, zeta = _forward_terms(fhat, alpha, beta, gamma, d)

    residual = q - targets
    err, ref = _relative_errors(q, targets, d)
    losses = err / ref
    scale = np.where(err > 0, 1.0 / (2.0 * np.where(err > 0, err, 1.0) * ref), 0.0)
    w = residual * scale.reshape((batch,) + (1,) * d) / batch
    w = np.expand_dims(w, axis=-d - 1)

    grad_gamma = np.sum(np.conj(zeta) * w, axis=0)
    u_phys = backend.inverse(np.conj(gamma) * w, d)
    f_conj = np.conj(np.expand_dims(fhat, axis=-d - 1))
    grad_alpha = np.sum(f_conj * backend.forward(u_phys * np.conj(b_phys), d), axis=0)
    grad_beta = np.sum(f_conj * backend.forward(u_phys * np.conj(a_phys), d), axis=0)

    n = params.n_trun
    grads = ParamGrads(
        alpha=restrict_modes(grad_alpha, n, d),
        beta=restrict_modes(grad_beta, n, d),
        gamma=restrict_modes(grad_gamma, n, d),
    )
    return float(np.mean(losses)), grads


def gradients(f: SpectralField, target: SpectralField, params: SpecNetParams) -> ParamGrads:
    f.grid.require_same(target.grid, "gradients")
    return batch_gradients(f.coeffs, target.coeffs, params, f.grid)[1]


def adam_step(params: SpecNetParams, grads: ParamGrads, state: OptimizerState):
    """
    One bias-corrected Adam update on the real view of the parameters.

    The real gradient of a real loss is 2 * dL/d(conj p).
    """
    bad = {name: int(np.count_nonzero(~np.isfinite(g))) for name, g in grads.arrays().items()}
    if any(bad.values()):
        raise NumericalError(
            f"Non-finite gradient entries at step {state.step}: {bad}",
            partial={"params": params, "state": state},
        )
    if not state.m:
        state = OptimizerState.create(params, state.lr, state.betas, state.eps)

    beta1, beta2 = state.betas
    step = state.step + 1
    new_state = OptimizerState(lr=state.lr, betas=state.betas, eps=state.eps, step=step)
    updated = {}
    for name in PARAM_NAMES:
        g = 2.0 * getattr(grads, name)
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * (g.real**2 + 1j * g.imag**2)
        m_hat = m / (1.0 - beta1**step)
        v_hat = v / (1.0 - beta2**step)
        delta = m_hat.real / (np.sqrt(v_hat.real) + state.eps) + 1j * (
            m_hat.imag / (np.sqrt(v_hat.imag) + state.eps)
        )
        updated[name] = getattr(params, name) - state.lr * delta
        new_state.m[name] = m
        new_state.v[name] = v
    return params.replace(**updated), new_state


def _stack(samples, attr):
    return np.stack([getattr(sample, attr).coeffs for sample in samples])


def evaluate_loss(samples, params: SpecNetParams, grid: VelocityGrid) -> float:
    if not samples:
        return float("nan")
    preds = forward_coeffs(_stack(samples, "f"), params, grid)
    return batch_loss(preds, _stack(samples, "q_target"), grid.d)


def train(corpus, params: SpecNetParams, options: TrainOptions, *, state=None, start_epoch=0, on_checkpoint=None, on_epoch=None):
    """
    Adam on the mean relative L2 loss until it drops to `options.tol` or the
    epoch budget runs out.

    Full batch: the epoch loss is measured at the parameters the epoch starts
    from and checked before the update, so a run that starts below tolerance
    stops at its first epoch. Minibatches: each batch takes one Adam step at
    the parameters current for it, and the epoch loss is the sample-weighted
    mean of those batch losses, checked after the pass.

    `on_checkpoint(params, state, epoch, loss_value)` receives the parameters
    after `epoch` completed epochs; `loss_value` is the loss of the last of
    those epochs.
    """
    train_set, val_set = corpus.split(options.val_fraction)
    if not train_set:
        raise ContractError("Training set is empty")
    grid = corpus.grid
    params.require_grid(grid)

    inputs = _stack(train_set, "f")
    targets = _stack(train_set, "q_target")
    n_samples = inputs.shape[0]
    state = state or OptimizerState.create(params, options.lr, options.betas, options.eps)
    full_batch = options.batch_size is None or options.batch_size >= n_samples
    report = TrainReport(start_epoch=start_epoch)
    started = time.perf_counter()
    logger.info(
        f"Training N_trun={params.n_trun}, M={params.M} on {n_samples} samples "
        f"({len(val_set)} held out), grid N={grid.N}, epochs {start_epoch}..{options.epochs}"
    )

    def diverged(epoch, loss_value, good_params, good_state):
        report.stop_reason = "diverged"
        return NumericalError(
            f"Training diverged at epoch {epoch} (loss {loss_value:.3e})",
            partial={"params": good_params, "state": good_state, "report": report, "epoch": epoch},
        )

    epoch = start_epoch
    for epoch in range(start_epoch, options.epochs):
        epoch_params, epoch_state = params, state
        if full_batch:
            epoch_loss, grads = batch_gradients(inputs, targets, params, grid)
            if not np.isfinite(epoch_loss) or epoch_loss > options.divergence:
                raise diverged(epoch, epoch_loss, params, state)
        else:
            order = np.random.default_rng([options.seed, epoch]).permutation(n_samples)
            total = 0.0
            for start in range(0, n_samples, options.batch_size):
                idx = order[start : start + options.batch_size]
                batch_loss_value, grads = batch_gradients(inputs[idx], targets[idx], params, grid)
                if not np.isfinite(batch_loss_value) or batch_loss_value > options.divergence:
                    raise diverged(epoch, batch_loss_value, epoch_params, epoch_state)
                params, state = adam_step(params, grads, state)
                total += batch_loss_value * len(idx)
            epoch_loss = total / n_samples

        report.train_loss.append(epoch_loss)
        report.wall_time.append(time.perf_counter() - started)

        if val_set and (epoch % options.val_every == 0):
            report.val_epochs.append(epoch)
            report.val_loss.append(evaluate_loss(val_set, params, grid))

        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)

        if epoch_loss <= options.tol:
            report.stop_reason = "tolerance"
            break

        if full_batch:
            params, state = adam_step(params, grads, state)

        if on_checkpoint is not None and options.checkpoint_every and (epoch + 1) % options.checkpoint_every == 0:
            on_checkpoint(params, state, epoch + 1, epoch_loss)

        if epoch % 1000 == 0:
            logger.debug(f"epoch {epoch}: loss {epoch_loss:.4e}")
    else:
        report.stop_reason = "budget"

    if report.stop_reason is None:
        report.stop_reason = "budget"
    if val_set and (not report.val_epochs or report.val_epochs[-1] != epoch):
        report.val_epochs.append(epoch)
        report.val_loss.append(evaluate_loss(val_set, params, grid))
    logger.info(f"Training stopped ({report.stop_reason}) after {report.epochs_run} epochs, loss {report.final_loss:.4e}")
    return params, report, state


def checkpoint_document(params: SpecNetParams, state: OptimizerState, *, epoch: int, loss_value: float, seed: int, kernel: dict = None, grid: dict = None, encoding: str = "decimal", loss_epoch: int = None) -> dict:
    """
    `epoch` counts completed epochs behind `params`; `loss_value` is the
    training loss measured during epoch `loss_epoch`, by default the last
    completed one.
    """
    if loss_epoch is None:
        loss_epoch = epoch - 1 if epoch > 0 else None
    return codec.make_document(
        "checkpoint",
        d=params.d,
        N_trun=params.n_trun,
        M=params.M,
        n_real_params=params.n_real_params,
        kernel=kernel or {},
        grid=grid or {},
        optimizer={
            "lr": state.lr,
            "betas": list(state.betas),
            "eps": state.eps,
            "step": state.step,
            "m": {k: codec.encode_array(v, encoding) for k, v in state.m.items()},
            "v": {k: codec.encode_array(v, encoding) for k, v in state.v.items()},
        },
        epoch=epoch,
        loss=loss_value,
        loss_epoch=loss_epoch,
        seed=seed,
        params={k: codec.encode_array(v, encoding) for k, v in params.arrays().items()},
    )


def load_checkpoint(document: dict):
    """Returns (params, optimizer state, document) after validating the parameter count"""
    document = codec.check_document(document, "checkpoint")
    try:
        arrays = {name: codec.decode_array(document["params"][name]) for name in PARAM_NAMES}
        params = SpecNetParams(document["d"], document["N_trun"], document["M"], **arrays)
        opt = document["optimizer"]
        state = OptimizerState(
            lr=opt["lr"],
            betas=tuple(opt["betas"]),
            eps=opt["eps"],
            step=opt["step"],
            m={k: codec.decode_array(v) for k, v in opt.get("m", {}).items()},
            v={k: codec.decode_array(v) for k, v in opt.get("v", {}).items()},
        )
    except (KeyError, TypeError, ContractError) as exc:
        raise codec.FormatError(f"Malformed checkpoint: {exc}") from exc
    if document.get("n_real_params") != params.n_real_params:
        raise codec.FormatError(
            f"Checkpoint declares {document.get('n_real_params')} real parameters, arrays hold {params.n_real_params}"
        )
    return params, state, document
