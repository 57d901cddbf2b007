"""Benchmark regressors and the named adversarial-trainer configurations.

PLS and GRNN are deterministic mappings; their "synthesis" repeats the
prediction for every requested sample. The variant table realizes the
published baseline configurations purely as settings of the adversarial
trainer (mismatch weight, with or without ensembling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class PlsModel:
    """Latent-component linear regression state (NIPALS fit)."""

    mean_x: np.ndarray
    mean_y: np.ndarray
    coef: np.ndarray  # (m, n)
    n_components: int


def pls_fit(X: np.ndarray, Y: np.ndarray, components: int) -> PlsModel:
    """Fit partial-least-squares regression by NIPALS deflation.

    Handles multi-output responses; deterministic. Requested components
    may be cut short if X or Y deflates to zero first.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must be row-aligned")
    n_samples, m = X.shape
    if components < 1:
        raise ConfigError("components must be >= 1")
    if components > min(n_samples - 1, m):
        raise ConfigError(f"components must be <= min(N-1, m) = "
                          f"{min(n_samples - 1, m)}")
    mean_x = X.mean(axis=0)
    mean_y = Y.mean(axis=0)
    Xc = X - mean_x
    Yc = Y - mean_y
    if not np.any(np.abs(Xc) > 1e-12):
        raise ValueError("X has zero variance")

    W = np.zeros((m, components))
    P = np.zeros((m, components))
    Q = np.zeros((Y.shape[1], components))
    done = 0
    for a in range(components):
        if np.all(np.abs(Yc) < 1e-12) or np.all(np.abs(Xc) < 1e-12):
            break
        u = Yc[:, int(np.argmax(Yc.var(axis=0)))]
        t = None
        for _ in range(500):
            w = Xc.T @ u
            norm = np.linalg.norm(w)
            if norm < 1e-15:
                break
            w /= norm
            t_new = Xc @ w
            q = Yc.T @ t_new / (t_new @ t_new)
            qq = q @ q
            if qq < 1e-30:
                break
            u_new = Yc @ q / qq
            if t is not None and np.linalg.norm(t_new - t) < 1e-12:
                t = t_new
                break
            t, u = t_new, u_new
        if t is None or norm < 1e-15:
            break
        tt = t @ t
        p = Xc.T @ t / tt
        q = Yc.T @ t / tt
        Xc = Xc - np.outer(t, p)
        Yc = Yc - np.outer(t, q)
        W[:, a], P[:, a], Q[:, a] = w, p, q
        done = a + 1
    if done == 0:
        raise ValueError("no usable component found")
    W, P, Q = W[:, :done], P[:, :done], Q[:, :done]
    coef = W @ np.linalg.solve(P.T @ W, Q.T)
    return PlsModel(mean_x=mean_x, mean_y=mean_y, coef=coef, n_components=done)


def pls_predict(model: PlsModel, x: np.ndarray) -> np.ndarray:
    """Linear prediction; accepts one row (m,) or a batch (B, m)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pred = model.mean_y + (np.atleast_2d(x) - model.mean_x) @ model.coef
    return pred[0] if single else pred


@dataclass
class GrnnModel:
    """Kernel-weighted regression over stored training pairs."""

    train_x: np.ndarray
    train_y: np.ndarray
    bandwidth: float


def grnn_fit(X: np.ndarray, Y: np.ndarray,
             bandwidth: float | None = None) -> GrnnModel:
    """Store the training pairs; bandwidth defaults to the median pairwise
    characteristic distance."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
        raise ValueError("need at least one aligned training pair")
    if bandwidth is None:
        if X.shape[0] < 2:
            bandwidth = 1.0
        else:
            d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
            dists = np.sqrt(d2[np.triu_indices(X.shape[0], k=1)])
            positive = dists[dists > 0]
            bandwidth = float(np.median(dists)) if np.median(dists) > 0 else \
                (float(positive.min()) if positive.size else 1.0)
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be positive")
    return GrnnModel(train_x=X, train_y=Y, bandwidth=float(bandwidth))


def grnn_predict(model: GrnnModel, x: np.ndarray) -> np.ndarray:
    """Weighted average of training targets with Gaussian weights
    exp(-||x - x_i||^2 / (2 b^2)).

    Exponents are shifted by their maximum before exponentiation, so a
    vanishing bandwidth degrades gracefully to the nearest neighbor's
    target instead of underflowing.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    d2 = ((xb[:, None, :] - model.train_x[None, :, :]) ** 2).sum(axis=2)
    expo = -d2 / (2.0 * model.bandwidth ** 2)
    w = np.exp(expo - expo.max(axis=1, keepdims=True))
    totals = w.sum(axis=1, keepdims=True)
    pred = np.empty((xb.shape[0], model.train_y.shape[1]))
    for i in range(xb.shape[0]):
        if totals[i, 0] > 0 and np.isfinite(totals[i, 0]):
            pred[i] = w[i] @ model.train_y / totals[i, 0]
        else:  # defensive: fall back to the nearest training neighbor
            pred[i] = model.train_y[int(np.argmin(d2[i]))]
    return pred[0] if single else pred


@dataclass(frozen=True)
class VariantSpec:
    """Trainer settings realizing one named method configuration."""

    name: str
    beta: float
    ensemble: bool
    k: int = 0
    h: int = 0


_VARIANTS = {
    "cgan": VariantSpec(name="cgan", beta=1.0, ensemble=False),
    "gan-cls": VariantSpec(name="gan-cls", beta=0.5, ensemble=False),
    "ctes": VariantSpec(name="ctes", beta=0.9, ensemble=False),
    "se-ctes": VariantSpec(name="se-ctes", beta=0.9, ensemble=True, k=5, h=2),
}


def variant_config(name: str) -> VariantSpec:
    """Map a method name to its trainer settings; all other settings are
    shared across the variants."""
    try:
        return _VARIANTS[name]
    except KeyError:
        raise ConfigError(f"unknown variant {name!r}; expected one of "
                          f"{sorted(_VARIANTS)}") from None
