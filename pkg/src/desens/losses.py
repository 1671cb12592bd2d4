"""Training losses: reconstruction, intrinsic/domain alignment, boundary, BCE.

Squared-error losses over pixel or latent tensors are mean-reduced over batch
and elements so the default weights stay meaningful across image sizes. The
statistics-alignment loss follows the written norm: squared L2 over channels,
averaged over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import torch
import torch.nn.functional as F

from .errors import InvalidConfigError, InvalidInputError, TrainingDivergenceError
from .feature_stats import DEFAULT_EPS, channel_stats

SCORE_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Weights of the auxiliary losses in the combined objective.

    lambda_b > 0 enables the boundary constraint; it defaults to off.
    """

    lambda_d: float = 0.1
    lambda_i: float = 0.1
    lambda_s: float = 0.1
    lambda_b: float = 0.0

    def __post_init__(self):
        for name in ("lambda_d", "lambda_i", "lambda_s", "lambda_b"):
            v = getattr(self, name)
            if not (v >= 0.0 and v == v and v != float("inf")):
                raise InvalidConfigError(f"{name} must be finite and >= 0, got {v}")


@dataclass
class LossBreakdown:
    """Individual loss values plus their weighted total.

    Fields hold scalars or 0-dim tensors; ``floats()`` detaches for logging.
    """

    cls: torch.Tensor | float
    d: torch.Tensor | float
    i: torch.Tensor | float
    s: torch.Tensor | float
    b: torch.Tensor | float
    total: torch.Tensor | float

    def floats(self) -> "LossBreakdown":
        def to_float(x):
            return float(x.detach()) if isinstance(x, torch.Tensor) else float(x)

        return LossBreakdown(*(to_float(getattr(self, f)) for f in ("cls", "d", "i", "s", "b", "total")))


def denoising_reconstruction_loss(
    z_out: torch.Tensor,
    x_a: torch.Tensor,
    decoder: Callable[[torch.Tensor], torch.Tensor],
    recon: torch.Tensor | None = None,
) -> torch.Tensor:
    """Mean squared error between decoder(z_out) and the original image x_a.

    ``recon`` may carry a precomputed decoder(z_out) to share the forward pass
    with other losses.
    """
    if recon is None:
        recon = decoder(z_out)
    if recon.shape != x_a.shape:
        raise InvalidInputError(
            f"decoder output shape {tuple(recon.shape)} != target shape {tuple(x_a.shape)}"
        )
    return F.mse_loss(recon, x_a)


def intrinsic_loss(
    z_out: torch.Tensor,
    encoder: Callable[[torch.Tensor], torch.Tensor],
    decoder: Callable[[torch.Tensor], torch.Tensor],
    recon: torch.Tensor | None = None,
) -> torch.Tensor:
    """Content loss: re-encode the reconstruction and compare with z_out.

    z_out acts as a constant target; no gradient flows through its target
    occurrence.
    """
    if recon is None:
        recon = decoder(z_out)
    reencoded = encoder(recon)
    if reencoded.shape != z_out.shape:
        raise InvalidInputError(
            f"re-encoded feature shape {tuple(reencoded.shape)} != latent shape {tuple(z_out.shape)}"
        )
    return F.mse_loss(reencoded, z_out.detach())


def domain_alignment_loss(
    x_b: torch.Tensor,
    z_out: torch.Tensor,
    encoder_stages: Callable[[torch.Tensor], Sequence[torch.Tensor]],
    decoder: Callable[[torch.Tensor], torch.Tensor],
    layer_taps: Sequence[int],
    eps: float = DEFAULT_EPS,
    recon: torch.Tensor | None = None,
) -> torch.Tensor:
    """Match per-channel (mu, sigma) of decoder(z_out) to those of x_b.

    For each tapped encoder layer l, accumulates
    ||mu_l(x_b) - mu_l(recon)||^2 + ||sigma_l(x_b) - sigma_l(recon)||^2,
    squared L2 over channels, averaged over the batch.
    """
    if not layer_taps:
        raise InvalidConfigError("layer_taps must not be empty")
    if recon is None:
        recon = decoder(z_out)
    stages_b = encoder_stages(x_b)
    stages_r = encoder_stages(recon)
    total = None
    for tap in layer_taps:
        if not 1 <= tap <= len(stages_b):
            raise InvalidConfigError(f"layer tap {tap} out of range 1..{len(stages_b)}")
        sb = channel_stats(stages_b[tap - 1], eps)
        sr = channel_stats(stages_r[tap - 1], eps)
        term = ((sb.mu - sr.mu) ** 2).sum(dim=1) + ((sb.sigma - sr.sigma) ** 2).sum(dim=1)
        term = term.mean()
        total = term if total is None else total + term
    return total


def cosine_distance(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """0.5 * (1 - cosine similarity), in [0, 1]. Rejects zero vectors."""
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError(
            f"expected two 1-D vectors of equal length, got {tuple(x.shape)} and {tuple(y.shape)}"
        )
    nx = torch.linalg.vector_norm(x)
    ny = torch.linalg.vector_norm(y)
    if float(nx) == 0.0 or float(ny) == 0.0:
        raise InvalidInputError("cosine distance is undefined for zero vectors")
    cos = torch.dot(x / nx, y / ny)
    return torch.clamp(0.5 * (1.0 - cos), 0.0, 1.0)


def _as_rep_matrix(reps, name: str) -> torch.Tensor:
    mat = torch.stack(list(reps)) if not isinstance(reps, torch.Tensor) else reps
    if mat.ndim != 2:
        raise InvalidInputError(f"{name} must be a list of vectors or an (N, D) tensor")
    norms = torch.linalg.vector_norm(mat, dim=1)
    if (norms == 0).any():
        raise InvalidInputError(f"{name} contains a zero vector")
    return mat / norms[:, None]


def boundary_loss(real_reps, fake_reps) -> torch.Tensor:
    """Pull real representations together, push fakes away (cosine distance).

    Mean pairwise distance over real-real pairs minus mean pairwise distance
    over real-fake pairs (1/(Nr*Nr) and 1/(Nr*Nf) normalization). Negative
    values mean fakes sit further from the reals than reals from each other.
    """
    r = _as_rep_matrix(real_reps, "real_reps")
    f = _as_rep_matrix(fake_reps, "fake_reps")
    if r.shape[0] < 2 or f.shape[0] < 1:
        raise InvalidInputError(
            f"need >= 2 real and >= 1 fake representations, got {r.shape[0]} and {f.shape[0]}"
        )
    dis_rr = 0.5 * (1.0 - r @ r.T)
    dis_rf = 0.5 * (1.0 - r @ f.T)
    return dis_rr.mean() - dis_rf.mean()


def classification_loss(scores: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy on probabilities, clamped away from {0, 1}."""
    if scores.shape != labels.shape:
        raise InvalidInputError(
            f"scores/labels length mismatch: {tuple(scores.shape)} vs {tuple(labels.shape)}"
        )
    s = torch.clamp(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    y = labels.to(s.dtype)
    return -(y * torch.log(s) + (1.0 - y) * torch.log(1.0 - s)).mean()


def total_loss(
    cls: torch.Tensor | float,
    d: torch.Tensor | float,
    i: torch.Tensor | float,
    s: torch.Tensor | float,
    weights: LossWeights,
    b: torch.Tensor | float | None = None,
) -> LossBreakdown:
    """Weighted sum: cls + ld*d + li*i + ls*s (+ lb*b when boundary is on)."""
    parts = {"cls": cls, "d": d, "i": i, "s": s}
    if b is not None:
        parts["b"] = b
    for name, value in parts.items():
        v = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
        if v != v or v in (float("inf"), float("-inf")):
            raise TrainingDivergenceError(-1, f"loss part '{name}' is non-finite ({v})")
    total = cls + weights.lambda_d * d + weights.lambda_i * i + weights.lambda_s * s
    if b is not None:
        total = total + weights.lambda_b * b
    return LossBreakdown(cls=cls, d=d, i=i, s=s, b=0.0 if b is None else b, total=total)
