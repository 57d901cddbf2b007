"""Characteristic-to-expression synthesis: a conditional generator and a
pair discriminator trained through a weighted three-pair minimax game.

The discriminator scores three kinds of pairs: a matched characteristic
and real expression, the same characteristic with a synthesized
expression, and a deliberately mismatched characteristic with a real
expression. The mismatch weight ``beta`` splits the two fake-pair terms;
values above one half keep the generator's distribution dominant in the
implied mixture, which is why sub-0.5 settings (used only by baseline
configurations) trigger a warning.

Vector expressions use dense stacks throughout; matrix expressions swap
the decoder/encoder for strided (de)convolutional stacks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import ndnet
from .datagen import PairedDataset
from .errors import ConfigError, MismatchImpossible, TrainingDiverged

PROB_CLAMP = 1e-7  # scores are pushed inside [clamp, 1-clamp] before logs


@dataclass
class TrainConfig:
    """Settings of one adversarial training run."""

    beta: float = 0.9
    batch_size: int = 50
    iterations: int = 1000
    z_dim: int = 8
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    hidden: int = 64
    convergence_window: int = 50
    convergence_tol: float = 1e-4
    jitter: float = 0.0
    seed: int = 0
    record_batches: bool = False
    conv_channels: tuple = (8, 16, 32, 64)

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 (mismatch sampling "
                              "needs two distinct characteristics)")
        if self.iterations < 0 or self.z_dim < 1:
            raise ConfigError("iterations must be >= 0 and z_dim >= 1")
        if self.jitter < 0:
            raise ConfigError("jitter must be >= 0")
        if self.beta <= 0.5:
            warnings.warn(
                f"beta={self.beta} <= 0.5 lets the mismatched-pair term "
                "dominate; expected only for baseline configurations",
                stacklevel=2)


@dataclass
class Normalization:
    """Per-feature z-score statistics shared by generator and discriminator."""

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "Normalization":
        def stats(a):
            mean = a.mean(axis=0)
            std = a.std(axis=0)
            return mean, np.where(std < 1e-8, 1.0, std)
        xm, xs = stats(x)
        ym, ys = stats(y)
        return cls(x_mean=xm, x_std=xs, y_mean=ym, y_std=ys)

    def norm_x(self, x):
        return (x - self.x_mean) / self.x_std

    def norm_y(self, y):
        return (y - self.y_mean) / self.y_std

    def denorm_y(self, yn):
        return yn * self.y_std + self.y_mean


@dataclass
class GeneratorModel:
    """Noise+characteristic mixer followed by an expression decoder."""

    mixer: ndnet.NetParams
    decoder: ndnet.NetParams
    z_dim: int
    norm: Normalization
    expr_shape: tuple | None = None


@dataclass
class DiscriminatorModel:
    """Expression encoder and a sigmoid scoring head over (x, encoding)."""

    encoder: ndnet.NetParams
    head: ndnet.NetParams
    norm: Normalization
    expr_shape: tuple | None = None


@dataclass
class CtesModel:
    """One trained generator/discriminator pair plus its loss trace."""

    generator: GeneratorModel
    discriminator: DiscriminatorModel
    config: TrainConfig
    loss_d: np.ndarray = field(default_factory=lambda: np.empty(0))
    loss_g: np.ndarray = field(default_factory=lambda: np.empty(0))
    iterations_run: int = 0
    diagnostics: dict = field(default_factory=dict)


def _conv_stack_depth(grid: int, channels: tuple) -> int:
    depth = int(np.log2(grid))
    if 2 ** depth != grid or depth < 1:
        raise ConfigError(f"matrix expressions need a power-of-two grid, got {grid}")
    if depth > len(channels):
        raise ConfigError(f"grid {grid} needs {depth} conv layers but only "
                          f"{len(channels)} channel sizes are configured")
    return depth


def build_generator(m: int, n: int, cfg: TrainConfig, seed: int,
                    expr_shape: tuple | None = None) -> GeneratorModel:
    """Mixer+decoder with the last decoder layer left linear."""
    if expr_shape is None:
        mixer_spec = [ndnet.dense(cfg.z_dim + m, cfg.hidden, "relu"),
                      ndnet.dense(cfg.hidden, cfg.hidden, "relu")]
        decoder_spec = [ndnet.dense(cfg.hidden, n, "none")]
    else:
        depth = _conv_stack_depth(expr_shape[0], cfg.conv_channels)
        chans = list(cfg.conv_channels[:depth])[::-1]  # widest at the 1x1 end
        mixer_spec = [ndnet.dense(cfg.z_dim + m, chans[0], "relu")]
        decoder_spec = []
        for i in range(depth - 1):
            decoder_spec.append(ndnet.deconv2d(chans[i], chans[i + 1],
                                               activation="relu"))
        decoder_spec.append(ndnet.deconv2d(chans[-1], 1, activation="none"))
    seeds = _as_seed_seq(seed).spawn(2)
    return GeneratorModel(
        mixer=ndnet.init_params(mixer_spec, seeds[0]),
        decoder=ndnet.init_params(decoder_spec, seeds[1]),
        z_dim=cfg.z_dim, norm=None, expr_shape=expr_shape)


def build_discriminator(m: int, n: int, cfg: TrainConfig, seed: int,
                        expr_shape: tuple | None = None) -> DiscriminatorModel:
    """Encoder+head with a sigmoid on the scalar output."""
    if expr_shape is None:
        encoder_spec = [ndnet.dense(n, cfg.hidden, "relu")]
        enc_out = cfg.hidden
    else:
        depth = _conv_stack_depth(expr_shape[0], cfg.conv_channels)
        chans = (1,) + tuple(cfg.conv_channels[:depth])
        encoder_spec = [ndnet.conv2d(chans[i], chans[i + 1], activation="relu")
                        for i in range(depth)]
        enc_out = chans[-1]
    head_spec = [ndnet.dense(m + enc_out, cfg.hidden, "relu"),
                 ndnet.dense(cfg.hidden, 1, "sigmoid")]
    seeds = _as_seed_seq(seed).spawn(2)
    return DiscriminatorModel(
        encoder=ndnet.init_params(encoder_spec, seeds[0]),
        head=ndnet.init_params(head_spec, seeds[1]),
        norm=None, expr_shape=expr_shape)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _as_seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _gen_forward_traced(gen: GeneratorModel, z: np.ndarray, xn: np.ndarray):
    """Normalized-space generator pass; returns (yhat_n, mixer/decoder traces)."""
    mix_tr = ndnet.forward(gen.mixer, np.hstack([z, xn]))
    dec_in = mix_tr.output
    if gen.expr_shape is not None:
        dec_in = dec_in.reshape(dec_in.shape[0], -1, 1, 1)
    dec_tr = ndnet.forward(gen.decoder, dec_in)
    yhat_n = dec_tr.output.reshape(z.shape[0], -1)
    return yhat_n, mix_tr, dec_tr


def _disc_scores_traced(disc: DiscriminatorModel, xn: np.ndarray, yn: np.ndarray):
    """Normalized-space discriminator pass; returns (scores, traces)."""
    enc_in = yn
    if disc.expr_shape is not None:
        h, w = disc.expr_shape
        enc_in = yn.reshape(yn.shape[0], 1, h, w)
    enc_tr = ndnet.forward(disc.encoder, enc_in)
    enc_out = enc_tr.output.reshape(yn.shape[0], -1)
    head_tr = ndnet.forward(disc.head, np.hstack([xn, enc_out]))
    return head_tr.output[:, 0], enc_tr, head_tr


def _disc_backward(disc: DiscriminatorModel, m: int, enc_tr, head_tr,
                   score_grad: np.ndarray):
    """Backprop one pair's score gradient; returns (head grads, encoder
    grads, gradient w.r.t. the normalized expression)."""
    head_grads, head_in_grad = ndnet.backprop(disc.head, head_tr,
                                              score_grad[:, None])
    enc_grad = head_in_grad[:, m:].reshape(enc_tr.output.shape)
    enc_grads, y_grad = ndnet.backprop(disc.encoder, enc_tr, enc_grad)
    return head_grads, enc_grads, y_grad.reshape(score_grad.shape[0], -1)


def _add_grads(acc, extra):
    if acc is None:
        return extra
    for lay, other in zip(acc, extra):
        for key in lay:
            lay[key] += other[key]
    return acc


def generator_forward(gen: GeneratorModel, z: np.ndarray,
                      x: np.ndarray) -> np.ndarray:
    """Synthesize one expression from noise z and characteristic x,
    de-normalized back to data scale."""
    z = np.asarray(z, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64).ravel()
    if z.size != gen.z_dim:
        raise ValueError(f"z has {z.size} entries, expected {gen.z_dim}")
    if x.size != gen.norm.x_mean.size:
        raise ValueError(f"x has {x.size} entries, expected "
                         f"{gen.norm.x_mean.size}")
    xn = gen.norm.norm_x(x)[None, :]
    yhat_n, _, _ = _gen_forward_traced(gen, z[None, :], xn)
    return gen.norm.denorm_y(yhat_n)[0]


def discriminator_forward(disc: DiscriminatorModel, x: np.ndarray,
                          y: np.ndarray) -> float:
    """Score one (characteristic, expression) pair; strictly inside (0, 1)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != disc.norm.x_mean.size or y.size != disc.norm.y_mean.size:
        raise ValueError("dimension mismatch")
    xn = disc.norm.norm_x(x)[None, :]
    yn = disc.norm.norm_y(y)[None, :]
    scores, _, _ = _disc_scores_traced(disc, xn, yn)
    return float(scores[0])


def _clamp(scores: np.ndarray) -> np.ndarray:
    return np.clip(scores, PROB_CLAMP, 1.0 - PROB_CLAMP)


def discriminator_loss(d_real, d_fake_y, d_fake_x, beta: float):
    """log(d_real) + beta*log(1 - d_fake_y) + (1-beta)*log(1 - d_fake_x).

    The trainer maximizes this quantity (implemented by minimizing its
    negation). Accepts scalars or aligned arrays.
    """
    d_real = _clamp(np.asarray(d_real, dtype=np.float64))
    d_fake_y = _clamp(np.asarray(d_fake_y, dtype=np.float64))
    d_fake_x = _clamp(np.asarray(d_fake_x, dtype=np.float64))
    return (np.log(d_real) + beta * np.log1p(-d_fake_y)
            + (1.0 - beta) * np.log1p(-d_fake_x))


def generator_loss(d_fake_y):
    """log(d_fake_y): the non-saturating objective the generator maximizes."""
    return np.log(_clamp(np.asarray(d_fake_y, dtype=np.float64)))


def sample_mismatch(batch_indices, dataset: PairedDataset,
                    rng: np.random.Generator) -> np.ndarray:
    """Mismatched characteristic indices: for every batch row j, a row
    drawn uniformly from the dataset whose characteristic vector differs
    from x^(j)."""
    x = dataset.x
    if np.unique(x, axis=0).shape[0] < 2:
        raise MismatchImpossible("all characteristic rows are identical")
    batch_indices = np.asarray(batch_indices)
    out = np.empty(len(batch_indices), dtype=np.int64)
    for j, idx in enumerate(batch_indices):
        while True:  # rejection keeps the draw uniform over eligible rows
            cand = int(rng.integers(0, dataset.n_samples))
            if not np.array_equal(x[cand], x[idx]):
                out[j] = cand
                break
    return out


def train_ctes(dataset: PairedDataset, config: TrainConfig) -> CtesModel:
    """Run the adversarial loop: per iteration, batch matched pairs, draw
    mismatches and noise, score the three pairs, then take one
    discriminator ascent step and one generator ascent step.

    Stops early once the moving averages of |dL_D| and |dL_G| over the
    convergence window drop below the tolerance. Deterministic given
    (dataset, config).
    """
    if dataset.n_samples < 1:
        raise ValueError("dataset is empty")
    if np.unique(dataset.x, axis=0).shape[0] < 2:
        raise MismatchImpossible("all characteristic rows are identical")
    m, n = dataset.char_dim, dataset.expr_dim
    norm = Normalization.fit(dataset.x, dataset.y)
    xn_all = norm.norm_x(dataset.x)
    yn_all = norm.norm_y(dataset.y)

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    gen = build_generator(m, n, config, seeds[0], dataset.expr_shape)
    disc = build_discriminator(m, n, config, seeds[1], dataset.expr_shape)
    gen.norm = disc.norm = norm
    rng = np.random.default_rng(seeds[2])

    opt = {net: ndnet.init_opt_state(params, config.optimizer,
                                     config.learning_rate)
           for net, params in (("mixer", gen.mixer), ("decoder", gen.decoder),
                               ("encoder", disc.encoder), ("head", disc.head))}

    s = config.batch_size
    N = dataset.n_samples
    beta = config.beta
    loss_d_trace, loss_g_trace = [], []
    score_min, score_max = np.inf, -np.inf
    recorded = [] if config.record_batches else None

    for it in range(config.iterations):
        idx = rng.choice(N, size=s, replace=N < s)
        mis = sample_mismatch(idx, dataset, rng)
        z = rng.standard_normal((s, config.z_dim))
        if recorded is not None:
            recorded.append((idx.copy(), mis.copy()))

        # --- discriminator ascent on the three-pair objective
        yhat_n, _, _ = _gen_forward_traced(gen, z, xn_all[idx])
        d_real, enc_r, head_r = _disc_scores_traced(disc, xn_all[idx], yn_all[idx])
        d_fy, enc_fy, head_fy = _disc_scores_traced(disc, xn_all[idx], yhat_n)
        d_fx, enc_fx, head_fx = _disc_scores_traced(disc, xn_all[mis], yn_all[idx])
        loss_d = float(np.mean(discriminator_loss(d_real, d_fy, d_fx, beta)))
        if not np.isfinite(loss_d):
            raise TrainingDiverged(f"discriminator loss became {loss_d} at "
                                   f"iteration {it}", iteration=it)
        lo = min(d_real.min(), d_fy.min(), d_fx.min())
        hi = max(d_real.max(), d_fy.max(), d_fx.max())
        score_min, score_max = min(score_min, lo), max(score_max, hi)

        # minimizing -L_D: d/dd of -log terms, scores clamped like the loss
        g_real = -1.0 / (s * _clamp(d_real))
        g_fy = beta / (s * _clamp(1.0 - d_fy))
        g_fx = (1.0 - beta) / (s * _clamp(1.0 - d_fx))
        head_grads = enc_grads = None
        for enc_tr, head_tr, g_score in ((enc_r, head_r, g_real),
                                         (enc_fy, head_fy, g_fy),
                                         (enc_fx, head_fx, g_fx)):
            hg, eg, _ = _disc_backward(disc, m, enc_tr, head_tr, g_score)
            head_grads = _add_grads(head_grads, hg)
            enc_grads = _add_grads(enc_grads, eg)
        ndnet.optimizer_step(disc.head, head_grads, opt["head"])
        ndnet.optimizer_step(disc.encoder, enc_grads, opt["encoder"])

        # --- generator ascent on log D(x, yhat) against the updated D
        yhat_n, mix_tr, dec_tr = _gen_forward_traced(gen, z, xn_all[idx])
        d_fy2, enc_tr, head_tr = _disc_scores_traced(disc, xn_all[idx], yhat_n)
        loss_g = float(np.mean(generator_loss(d_fy2)))
        if not np.isfinite(loss_g):
            raise TrainingDiverged(f"generator loss became {loss_g} at "
                                   f"iteration {it}", iteration=it)
        score_min = min(score_min, float(d_fy2.min()))
        score_max = max(score_max, float(d_fy2.max()))
        g_score = -1.0 / (s * _clamp(d_fy2))
        _, _, yhat_grad = _disc_backward(disc, m, enc_tr, head_tr, g_score)
        dec_out_grad = yhat_grad.reshape(dec_tr.output.shape)
        dec_grads, dec_in_grad = ndnet.backprop(gen.decoder, dec_tr, dec_out_grad)
        mix_grads, _ = ndnet.backprop(gen.mixer, mix_tr,
                                      dec_in_grad.reshape(mix_tr.output.shape))
        ndnet.optimizer_step(gen.decoder, dec_grads, opt["decoder"])
        ndnet.optimizer_step(gen.mixer, mix_grads, opt["mixer"])

        loss_d_trace.append(loss_d)
        loss_g_trace.append(loss_g)
        w = config.convergence_window
        if len(loss_d_trace) > w:
            dd = np.abs(np.diff(loss_d_trace[-(w + 1):])).mean()
            dg = np.abs(np.diff(loss_g_trace[-(w + 1):])).mean()
            if dd < config.convergence_tol and dg < config.convergence_tol:
                break

    diagnostics = {"score_min": score_min, "score_max": score_max}
    if recorded is not None:
        diagnostics["batches"] = recorded
    return CtesModel(generator=gen, discriminator=disc, config=config,
                     loss_d=np.array(loss_d_trace),
                     loss_g=np.array(loss_g_trace),
                     iterations_run=len(loss_d_trace),
                     diagnostics=diagnostics)


def synthesize(model: CtesModel, x: np.ndarray, count: int,
               rng=None, jitter: float | None = None) -> np.ndarray:
    """Draw ``count`` expressions for one characteristic.

    Each draw uses fresh standard-normal noise; when ``jitter`` is
    positive the characteristic itself is perturbed by N(0, jitter^2)
    per draw to diversify the outputs.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    x = np.asarray(x, dtype=np.float64).ravel()
    rows = np.repeat(x[None, :], count, axis=0)
    return synthesize_each(model, rows, rng=rng, jitter=jitter)


def synthesize_each(model: CtesModel, X: np.ndarray,
                    rng=None, jitter: float | None = None) -> np.ndarray:
    """One synthesized expression per characteristic row."""
    gen = model.generator
    jitter = model.config.jitter if jitter is None else jitter
    if jitter < 0:
        raise ValueError("jitter must be >= 0")
    rng = _as_rng(rng)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != gen.norm.x_mean.size:
        raise ValueError(f"characteristics have {X.shape[1]} columns, "
                         f"expected {gen.norm.x_mean.size}")
    if jitter > 0:
        X = X + rng.normal(0.0, jitter, size=X.shape)
    z = rng.standard_normal((X.shape[0], gen.z_dim))
    yhat_n, _, _ = _gen_forward_traced(gen, z, gen.norm.norm_x(X))
    return gen.norm.denorm_y(yhat_n)


def toy_minimax_oracle(p_data, p_g, p_prime, beta: float):
    """Optimal-discriminator check on discrete distributions.

    Returns the pointwise optimal discriminator
    ``p_data / (p_data + beta*p_g + (1-beta)*p_prime)`` and the value of
    the maximized objective by exact summation. Support points with zero
    total mass contribute nothing (their discriminator entry defaults to
    0.5 by convention).
    """
    p_data = np.asarray(p_data, dtype=np.float64)
    p_g = np.asarray(p_g, dtype=np.float64)
    p_prime = np.asarray(p_prime, dtype=np.float64)
    if not (p_data.shape == p_g.shape == p_prime.shape):
        raise ValueError("distributions must share one support")
    for name, p in (("p_data", p_data), ("p_g", p_g), ("p_prime", p_prime)):
        if abs(p.sum() - 1.0) > 1e-12 or (p < 0).any():
            raise ValueError(f"{name} is not a probability vector")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    mix = beta * p_g + (1.0 - beta) * p_prime
    total = p_data + mix
    live = total > 0
    d_star = np.full_like(p_data, 0.5)
    d_star[live] = p_data[live] / total[live]
    # log(d*) = log p_data - log total and log(1-d*) = log mix - log total,
    # evaluated only where the weighting mass is positive
    value = 0.0
    mask = live & (p_data > 0)
    value += float(np.sum(p_data[mask]
                          * (np.log(p_data[mask]) - np.log(total[mask]))))
    mask = live & (mix > 0)
    value += float(np.sum(mix[mask]
                          * (np.log(mix[mask]) - np.log(total[mask]))))
    return d_star, value
