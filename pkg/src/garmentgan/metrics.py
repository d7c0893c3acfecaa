"""Inception Score and Frechet Inception Distance over image sets, with a
pluggable embedding/classifier backbone."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InsufficientData, ShapeMismatch


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray        # (k,)
    covariance: np.ndarray  # (k, k)

    def __post_init__(self):
        k = self.mean.shape[0]
        if self.covariance.shape != (k, k):
            raise ShapeMismatch(
                f"covariance {self.covariance.shape} vs mean dim {k}")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-6):
            raise ValueError("covariance must be symmetric")


def gaussian_stats(features: np.ndarray) -> GaussianStats:
    """Sample mean and unbiased sample covariance of row features."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 2:
        raise InsufficientData("need at least 2 feature rows")
    mean = feats.mean(axis=0)
    cov = np.cov(feats, rowvar=False)
    cov = np.atleast_2d(cov)
    return GaussianStats(mean=mean, covariance=cov)


def _sqrtm_product_trace(cov_a: np.ndarray, cov_b: np.ndarray) -> float:
    """tr((cov_a cov_b)^{1/2}) via the symmetric form
    sqrt(A)^T B sqrt(A); tiny negative eigenvalues are clamped to 0."""
    wa, va = scipy.linalg.eigh(cov_a)
    sqrt_a = (va * np.sqrt(np.clip(wa, 0, None))) @ va.T
    middle = sqrt_a @ cov_b @ sqrt_a
    w = scipy.linalg.eigvalsh(middle)
    return float(np.sqrt(np.clip(w, 0, None)).sum())


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}), clamped >= 0."""
    if a.mean.shape != b.mean.shape:
        raise ShapeMismatch(f"{a.mean.shape} vs {b.mean.shape}")
    diff = a.mean - b.mean
    dist = (diff @ diff
            + np.trace(a.covariance) + np.trace(b.covariance)
            - 2.0 * _sqrtm_product_trace(a.covariance, b.covariance))
    return max(0.0, float(dist))


def inception_score_from_probs(probs: np.ndarray, n_splits: int = 10
                               ) -> tuple[float, float]:
    """exp(mean KL(p(y|x) || split marginal)), mean and std over splits."""
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    if n < n_splits or n_splits < 1:
        raise InsufficientData(f"{n} samples cannot fill {n_splits} splits")
    scores = []
    for part in np.array_split(probs, n_splits):
        if part.shape[0] == 0:
            raise InsufficientData("empty split")
        marginal = part.mean(axis=0, keepdims=True)
        kl = part * (np.log(np.clip(part, 1e-16, None))
                     - np.log(np.clip(marginal, 1e-16, None)))
        scores.append(np.exp(kl.sum(axis=1).mean()))
    return float(np.mean(scores)), float(np.std(scores))


def inception_score(images: np.ndarray, backbone, n_splits: int = 10
                    ) -> tuple[float, float]:
    return inception_score_from_probs(backbone.classify(images), n_splits)


def fid(real_images: np.ndarray, generated_images: np.ndarray, backbone) -> float:
    """Frechet distance between Gaussians fit to backbone embeddings."""
    real = backbone.embed(real_images)
    gen = backbone.embed(generated_images)
    k = real.shape[1]
    if real.shape[0] < k or gen.shape[0] < k:
        warnings.warn(
            f"fewer samples than embedding dim {k}; covariance is rank-deficient",
            stacklevel=2)
    return frechet_distance(gaussian_stats(real), gaussian_stats(gen))
