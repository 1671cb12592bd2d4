"""Per-channel feature statistics: decomposition into intrinsic and domain parts.

A feature map of shape (N, C, H, W) is summarized per sample and per channel
by its spatial mean and standard deviation (instance-norm convention). The
(mu, sigma) pair is the sample's domain information; the normalized residual
is its intrinsic feature. Swapping statistics between two samples re-styles
one with the domain of the other while preserving its intrinsic content.

All operations are pure functions of their inputs plus an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import DegenerateBatchError, InvalidInputError

DEFAULT_EPS = 1e-5

Pairing = list[tuple[int, int]]


@dataclass(frozen=True)
class DomainStats:
    """Per-sample, per-channel (mean, std). Both tensors have shape (N, C)."""

    mu: torch.Tensor
    sigma: torch.Tensor

    def __post_init__(self):
        if self.mu.shape != self.sigma.shape:
            raise InvalidInputError(
                f"mu/sigma shape mismatch: {tuple(self.mu.shape)} vs {tuple(self.sigma.shape)}"
            )


def _check_feature_map(z: torch.Tensor, name: str = "z") -> None:
    if z.ndim != 4:
        raise InvalidInputError(f"{name} must be 4-D (N, C, H, W), got shape {tuple(z.shape)}")
    if min(z.shape) < 1:
        raise InvalidInputError(f"{name} has an empty dimension: {tuple(z.shape)}")
    if not torch.isfinite(z).all():
        raise InvalidInputError(f"{name} contains non-finite values")


def channel_stats(z: torch.Tensor, eps: float = DEFAULT_EPS) -> DomainStats:
    """Spatial mean and std per (sample, channel).

    sigma = sqrt(population variance + eps), so it is strictly positive even
    for constant channels.
    """
    _check_feature_map(z)
    if eps < 0:
        raise InvalidInputError(f"eps must be >= 0, got {eps}")
    mu = z.mean(dim=(2, 3))
    var = z.var(dim=(2, 3), unbiased=False)
    sigma = torch.sqrt(var + eps)
    return DomainStats(mu=mu, sigma=sigma)


def decompose(z: torch.Tensor, eps: float = DEFAULT_EPS) -> tuple[torch.Tensor, DomainStats]:
    """Split a feature map into (intrinsic feature, domain stats).

    The intrinsic feature is (z - mu) / sigma broadcast per (sample, channel);
    it has zero mean and, whenever the raw channel std dominates sqrt(eps),
    unit std.
    """
    stats = channel_stats(z, eps)
    intrinsic = (z - stats.mu[:, :, None, None]) / stats.sigma[:, :, None, None]
    return intrinsic, stats


def recompose(intrinsic: torch.Tensor, stats: DomainStats) -> torch.Tensor:
    """Inverse of :func:`decompose`: sigma * intrinsic + mu."""
    _check_feature_map(intrinsic, "intrinsic")
    if stats.mu.shape != intrinsic.shape[:2]:
        raise InvalidInputError(
            f"stats shape {tuple(stats.mu.shape)} does not match feature map "
            f"{tuple(intrinsic.shape[:2])}"
        )
    return stats.sigma[:, :, None, None] * intrinsic + stats.mu[:, :, None, None]


def domain_transform(
    z_a: torch.Tensor, z_b: torch.Tensor, eps: float = DEFAULT_EPS
) -> torch.Tensor:
    """Re-style z_a with the per-channel statistics of z_b.

    z_out = sigma_b * (z_a - mu_a) / sigma_a + mu_b, pairing samples 1:1 along
    the batch dimension. The output keeps z_a's intrinsic feature and adopts
    z_b's domain stats.
    """
    if z_a.shape != z_b.shape:
        raise InvalidInputError(
            f"paired feature maps must have equal shapes, got {tuple(z_a.shape)} "
            f"vs {tuple(z_b.shape)}"
        )
    intrinsic_a, _ = decompose(z_a, eps)
    stats_b = channel_stats(z_b, eps)
    return recompose(intrinsic_a, stats_b)


def mix_count(alpha: float, n: int) -> int:
    """Number of samples to transform: ceil(alpha * n), robust to float fuzz."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must be in [0, 1], got {alpha}")
    return math.ceil(alpha * n - 1e-9)


def draw_pairing(
    domain_ids: list[int] | np.ndarray,
    alpha: float,
    rng_seed,
) -> Pairing:
    """Choose which samples get re-styled and by whom.

    The first ceil(alpha*N) indices of a seeded shuffle are re-styled; each
    partner is drawn uniformly from samples of a different domain, without
    replacement across the batch, falling back to replacement only once a
    domain's partner pool is exhausted.
    """
    domain_ids = np.asarray(domain_ids, dtype=np.int64)
    n = len(domain_ids)
    n_mix = mix_count(alpha, n)
    if n_mix == 0:
        return []
    if len(np.unique(domain_ids)) < 2:
        raise DegenerateBatchError(
            "batch contains a single domain; style mixing needs at least two"
        )
    rng = np.random.default_rng(rng_seed)
    selected = rng.permutation(n)[:n_mix]
    used: set[int] = set()
    pairing: Pairing = []
    for src in selected:
        pool = np.flatnonzero(domain_ids != domain_ids[src])
        fresh = [int(j) for j in pool if int(j) not in used]
        if fresh:
            partner = int(rng.choice(fresh))
            used.add(partner)
        else:
            partner = int(rng.choice(pool))
        pairing.append((int(src), partner))
    return pairing


def batch_domain_mix(
    batch: torch.Tensor,
    domain_ids: list[int] | np.ndarray,
    alpha: float,
    rng_seed=None,
    eps: float = DEFAULT_EPS,
    pairing: Pairing | None = None,
) -> tuple[torch.Tensor, Pairing]:
    """Re-style a seeded fraction of a batch with other-domain partners.

    Exactly ceil(alpha * N) samples are replaced by their domain-transformed
    version; the rest pass through untouched. Returns the mixed batch and the
    (source index, partner index) record. Pass ``pairing`` to reuse a record
    drawn earlier (e.g. to apply the same mixing at several layers).
    """
    _check_feature_map(batch, "batch")
    if len(domain_ids) != batch.shape[0]:
        raise InvalidInputError(
            f"domain_ids has length {len(domain_ids)}, batch has {batch.shape[0]} samples"
        )
    if pairing is None:
        pairing = draw_pairing(domain_ids, alpha, rng_seed)
    if not pairing:
        return batch, []
    src = torch.as_tensor([p[0] for p in pairing], dtype=torch.long, device=batch.device)
    partner = torch.as_tensor([p[1] for p in pairing], dtype=torch.long, device=batch.device)
    mixed = batch.clone()
    mixed[src] = domain_transform(batch[src], batch[partner], eps)
    return mixed, pairing
