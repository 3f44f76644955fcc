"""Recording-specific speaker discriminators and latent feature streams.

A shallow feed-forward network (tanh hidden layer, linear second hidden
layer, softmax output) or a regularized LDA is trained on first-pass
labels; spectral frames are then projected into the discriminative
latent space. Network latents are PCA-orthogonalized (rotation only,
no dimension reduction); LDA latents are used as-is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .diarization import Diarization
from .errors import DivergenceError, NumericError, TrainingImpossibleError
from .features import FeatureStream


def prune_short_clusters(diar: Diarization, min_total: float = 3.0
                         ) -> tuple[Diarization, list[str]]:
    """Drop labels with under min_total seconds from the training set.

    The diarization itself is returned untouched; only the kept-label
    list shrinks. Raises TrainingImpossibleError when nothing survives.
    """
    if not diar.entries:
        raise TrainingImpossibleError("empty diarization")
    totals = diar.total_by_speaker()
    kept = [label for label in diar.speakers if totals[label] >= min_total]
    if not kept:
        raise TrainingImpossibleError(
            f"all {len(totals)} clusters fall under {min_total} s of speech"
        )
    return diar, kept


# ---------------------------------------------------------------------------
# Shallow feed-forward network
# ---------------------------------------------------------------------------


@dataclass
class MfnnModel:
    """Two hidden layers (tanh then linear) and a softmax output."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    seed: int
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    @property
    def n_classes(self) -> int:
        return self.w3.shape[1]

    def hidden(self, x: np.ndarray) -> np.ndarray:
        """Second-hidden-layer activations (the latent representation)."""
        return np.tanh(x @ self.w1 + self.b1) @ self.w2 + self.b2

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.hidden(x) @ self.w3 + self.b3

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        z = self.logits(x)
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _init_mfnn(rng, dims, hidden1, hidden2, n_classes, seed) -> MfnnModel:
    return MfnnModel(
        w1=_glorot(rng, dims, hidden1), b1=np.zeros(hidden1),
        w2=_glorot(rng, hidden1, hidden2), b2=np.zeros(hidden2),
        w3=_glorot(rng, hidden2, n_classes), b3=np.zeros(n_classes),
        seed=seed,
    )


def mfnn_loss_and_gradients(model: MfnnModel, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradient for every parameter.

    Overflow is left to produce inf/nan; the trainer detects it via the
    loss and restarts with a smaller step.
    """
    n = x.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        a1 = np.tanh(x @ model.w1 + model.b1)
        h2 = a1 @ model.w2 + model.b2
        z = h2 @ model.w3 + model.b3
        z_shift = z - z.max(axis=1, keepdims=True)
        exp = np.exp(z_shift)
        probs = exp / exp.sum(axis=1, keepdims=True)
        loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))

        dz = probs.copy()
        dz[np.arange(n), y] -= 1.0
        dz /= n
        grads = {
            "w3": h2.T @ dz, "b3": dz.sum(axis=0),
        }
        dh2 = dz @ model.w3.T
        grads["w2"] = a1.T @ dh2
        grads["b2"] = dh2.sum(axis=0)
        da1 = (dh2 @ model.w2.T) * (1.0 - a1 ** 2)
        grads["w1"] = x.T @ da1
        grads["b1"] = da1.sum(axis=0)
    return loss, grads


def _sgd_pass(model: MfnnModel, x, y, rng, lr, epochs, batch_size) -> bool:
    """Train in place; False if a non-finite loss shows up."""
    n = x.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            sel = order[lo:lo + batch_size]
            loss, grads = mfnn_loss_and_gradients(model, x[sel], y[sel])
            if not np.isfinite(loss):
                return False
            for name, grad in grads.items():
                param = getattr(model, name)
                param -= lr * grad
    return True


def train_mfnn(frames: np.ndarray, labels: np.ndarray, seed: int = 0,
               hidden1: int = 34, hidden2: int = 19, lr: float = 0.01,
               epochs: int = 10, batch_size: int = 256) -> MfnnModel:
    """Plain SGD with cross-entropy and Glorot-uniform init.

    Labels must be 0..K-1 with K >= 2 and every class present. On a
    non-finite loss the run restarts once from the same init with the
    learning rate halved, then gives up.
    """
    frames = np.asarray(frames, dtype=np.float64)
    labels = np.asarray(labels)
    n_classes = int(labels.max()) + 1
    if n_classes < 2:
        raise TrainingImpossibleError("need at least 2 classes")
    counts = np.bincount(labels, minlength=n_classes)
    if (counts == 0).any():
        raise TrainingImpossibleError("every class needs at least one frame")

    for attempt, rate in enumerate((lr, lr / 2.0)):
        rng = np.random.default_rng(seed)
        model = _init_mfnn(rng, frames.shape[1], hidden1, hidden2,
                           n_classes, seed)
        model.initial_loss, _ = mfnn_loss_and_gradients(model, frames, labels)
        if _sgd_pass(model, frames, labels, rng, rate, epochs, batch_size):
            model.final_loss, _ = mfnn_loss_and_gradients(model, frames, labels)
            if np.isfinite(model.final_loss):
                return model
    raise DivergenceError("training loss is non-finite even after halving lr")


def project_mfnn(model: MfnnModel, stream: FeatureStream) -> FeatureStream:
    """Per-frame second-hidden-layer activations as a feature stream."""
    if stream.dims != model.w1.shape[0]:
        raise ValueError(f"stream dims {stream.dims} != model input "
                         f"{model.w1.shape[0]}")
    return FeatureStream(
        frames=model.hidden(stream.frames),
        frame_period=stream.frame_period,
        window_length=stream.window_length,
        recording_id=stream.recording_id,
    )


# ---------------------------------------------------------------------------
# Linear discriminant analysis
# ---------------------------------------------------------------------------


@dataclass
class LdaModel:
    """Top generalized eigen-directions of (S_B, S_W + lambda I)."""

    projection: np.ndarray   # (dims, rank)
    class_means: np.ndarray  # (n_classes, dims)
    eigenvalues: np.ndarray  # (rank,), decreasing
    regularizer: float


def _scatter_matrices(frames: np.ndarray, labels: np.ndarray):
    classes = np.unique(labels)
    dims = frames.shape[1]
    grand_mean = frames.mean(axis=0)
    s_w = np.zeros((dims, dims))
    s_b = np.zeros((dims, dims))
    class_means = np.empty((classes.size, dims))
    for row, cls in enumerate(classes):
        chunk = frames[labels == cls]
        mean = chunk.mean(axis=0)
        class_means[row] = mean
        centered = chunk - mean
        s_w += centered.T @ centered
        offset = (mean - grand_mean)[:, None]
        s_b += chunk.shape[0] * (offset @ offset.T)
    return s_w, s_b, class_means


def train_lda(frames: np.ndarray, labels: np.ndarray,
              reg_scale: float = 1e-6) -> LdaModel:
    """Solve S_B v = lambda (S_W + reg I) v and keep the top
    min(dims, n_classes - 1) directions."""
    frames = np.asarray(frames, dtype=np.float64)
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise TrainingImpossibleError("need at least 2 classes")
    if (counts < 2).any():
        raise TrainingImpossibleError("every class needs at least 2 frames")
    dims = frames.shape[1]
    s_w, s_b, class_means = _scatter_matrices(frames, labels)
    reg = reg_scale * np.trace(s_w) / dims
    try:
        eigvals, eigvecs = scipy.linalg.eigh(s_b, s_w + reg * np.eye(dims))
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise NumericError(f"generalized eigenproblem failed: {exc}") from exc
    rank = min(dims, classes.size - 1)
    order = np.argsort(eigvals)[::-1][:rank]
    return LdaModel(projection=eigvecs[:, order],
                    class_means=class_means,
                    eigenvalues=eigvals[order],
                    regularizer=reg)


def project_lda(model: LdaModel, stream: FeatureStream) -> FeatureStream:
    if stream.dims != model.projection.shape[0]:
        raise ValueError(f"stream dims {stream.dims} != model input "
                         f"{model.projection.shape[0]}")
    return FeatureStream(
        frames=stream.frames @ model.projection,
        frame_period=stream.frame_period,
        window_length=stream.window_length,
        recording_id=stream.recording_id,
    )


# ---------------------------------------------------------------------------
# PCA orthogonalization
# ---------------------------------------------------------------------------


@dataclass
class PcaRotation:
    mean: np.ndarray
    rotation: np.ndarray  # orthonormal, all dims kept


def pca_orthogonalize(stream: FeatureStream,
                      fit_rows: np.ndarray | None = None
                      ) -> tuple[FeatureStream, PcaRotation]:
    """Rotate features onto covariance eigenvectors (no dimension cut).

    fit_rows optionally restricts covariance estimation to a frame
    subset (e.g. speech frames) while the rotation is applied to the
    whole stream. Eigenvector signs are fixed so the largest-magnitude
    component is positive.
    """
    fit = stream.frames if fit_rows is None else stream.frames[fit_rows]
    if fit.shape[0] < stream.dims + 1:
        raise ValueError("need more frames than dimensions for PCA")
    mean = fit.mean(axis=0)
    centered = fit - mean
    cov = centered.T @ centered / (fit.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    rotation = eigvecs[:, order]
    flips = np.sign(rotation[np.argmax(np.abs(rotation), axis=0),
                             np.arange(rotation.shape[1])])
    flips[flips == 0] = 1.0
    rotation = rotation * flips
    rotated = FeatureStream(
        frames=(stream.frames - mean) @ rotation,
        frame_period=stream.frame_period,
        window_length=stream.window_length,
        recording_id=stream.recording_id,
    )
    return rotated, PcaRotation(mean=mean, rotation=rotation)


def save_mfnn(path, model: MfnnModel) -> None:
    """Debug dump (npz archive of the parameter arrays plus the seed)."""
    np.savez(path, w1=model.w1, b1=model.b1, w2=model.w2, b2=model.b2,
             w3=model.w3, b3=model.b3,
             meta=np.array([model.seed, model.initial_loss, model.final_loss]))


def load_mfnn(path) -> MfnnModel:
    data = np.load(path)
    meta = data["meta"]
    return MfnnModel(w1=data["w1"], b1=data["b1"], w2=data["w2"],
                     b2=data["b2"], w3=data["w3"], b3=data["b3"],
                     seed=int(meta[0]), initial_loss=float(meta[1]),
                     final_loss=float(meta[2]))


def axis_fisher_ratios(frames: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Between- to within-class scatter ratio along each axis.

    Axis-aligned on purpose: this is the separability a diagonal-
    covariance model can exploit, unlike rotation-invariant criteria.
    The peak value is the usual scalar summary of a feature space.
    """
    s_w, s_b, _ = _scatter_matrices(np.asarray(frames, dtype=np.float64),
                                    np.asarray(labels))
    return np.diag(s_b) / np.maximum(np.diag(s_w), 1e-300)


def top_fisher_eigenvalue(frames: np.ndarray, labels: np.ndarray,
                          reg_scale: float = 1e-6) -> float:
    """Largest generalized Fisher eigenvalue of a feature space; no
    linear projection of the space can exceed it."""
    frames = np.asarray(frames, dtype=np.float64)
    s_w, s_b, _ = _scatter_matrices(frames, np.asarray(labels))
    reg = reg_scale * np.trace(s_w) / frames.shape[1]
    eigvals = scipy.linalg.eigh(s_b, s_w + reg * np.eye(frames.shape[1]),
                                eigvals_only=True)
    return float(eigvals[-1])
