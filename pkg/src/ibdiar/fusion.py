"""Frame-level fusion of posteriors from two latent feature streams."""

from __future__ import annotations

from dataclasses import dataclass

from .gmm import PosteriorMatrix


@dataclass(frozen=True)
class FusionWeights:
    """Convex weights for the network and LDA streams."""

    w_nn: float
    w_lda: float

    def __post_init__(self):
        if self.w_nn < 0 or self.w_lda < 0:
            raise ValueError("fusion weights must be non-negative")
        if abs(self.w_nn + self.w_lda - 1.0) > 1e-12:
            raise ValueError("fusion weights must sum to 1")

    @classmethod
    def parse(cls, text: str) -> "FusionWeights":
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'wN,wL', got {text!r}")
        return cls(w_nn=float(parts[0]), w_lda=float(parts[1]))


def fuse_posteriors(post_nn: PosteriorMatrix, post_lda: PosteriorMatrix,
                    weights: FusionWeights) -> PosteriorMatrix:
    """Row-wise convex combination; both matrices must be posteriors
    over equally many components for the same frames."""
    if post_nn.level != post_lda.level:
        raise ValueError("posterior levels differ")
    if post_nn.rows.shape != post_lda.rows.shape:
        raise ValueError(
            f"shape mismatch: {post_nn.rows.shape} vs {post_lda.rows.shape}"
        )
    fused = weights.w_nn * post_nn.rows + weights.w_lda * post_lda.rows
    return PosteriorMatrix(rows=fused, level=post_nn.level)
