"""Audio decoding, MFCC extraction, and the binary feature-file format.

Feature files are little-endian: magic ``IBFT``, u32 dims, f64 frame
period (seconds), u64 frame count, then row-major float32 values.
"""

from __future__ import annotations

import csv
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .errors import EmptyStreamError, FormatError, TruncatedFileError

FEATURE_MAGIC = b"IBFT"
_HEADER = struct.Struct("<4sIdQ")

#: Floor applied to filterbank energies before the log, so silence maps
#: to a finite constant instead of -inf.
LOG_ENERGY_FLOOR = 1e-10


@dataclass
class FeatureStream:
    """Frame-indexed acoustic feature matrix with timing metadata.

    Frame ``k`` covers ``[k * frame_period, k * frame_period + window_length)``
    seconds of signal.
    """

    frames: np.ndarray
    frame_period: float = 0.010
    window_length: float = 0.025
    recording_id: str = ""

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValueError("frames must be a 2-d matrix")
        if self.frames.size and not np.isfinite(self.frames).all():
            raise ValueError("feature values must be finite")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dims(self) -> int:
        return self.frames.shape[1]

    @property
    def duration(self) -> float:
        """Span covered by the frame grid, in seconds."""
        return self.n_frames * self.frame_period


@dataclass(frozen=True)
class MfccConfig:
    """Front-end settings. Defaults: 26 mel filters, cepstra c1..c19,
    25 ms Hamming window, 10 ms shift, pre-emphasis 0.97, no liftering."""

    n_filters: int = 26
    n_ceps: int = 19
    window_length: float = 0.025
    frame_shift: float = 0.010
    pre_emphasis: float = 0.97
    lifter: int = 0


def decode_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono PCM-16 WAV file and scale samples to [-1, 1)."""
    try:
        with wave.open(str(path), "rb") as wav:
            if wav.getcomptype() != "NONE":
                raise FormatError(f"{path}: compressed WAV not supported")
            if wav.getnchannels() != 1:
                raise FormatError(
                    f"{path}: expected mono audio, got {wav.getnchannels()} channels"
                )
            if wav.getsampwidth() != 2:
                raise FormatError(
                    f"{path}: expected 16-bit PCM, got {8 * wav.getsampwidth()}-bit"
                )
            n_frames = wav.getnframes()
            rate = wav.getframerate()
            raw = wav.readframes(n_frames)
    except wave.Error as exc:
        raise FormatError(f"{path}: not a PCM WAV file ({exc})") from exc
    if len(raw) < 2 * n_frames:
        raise TruncatedFileError(
            f"{path}: header promises {n_frames} samples, body holds {len(raw) // 2}"
        )
    if n_frames == 0:
        raise FormatError(f"{path}: no samples")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1) as mono PCM-16 (test/debug helper)."""
    pcm = np.clip(np.asarray(samples) * 32768.0, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(pcm.tobytes())


def _mel(hz):
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def _inv_mel(mel):
    return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)


def _mel_filterbank(n_filters: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank over the rfft bins, 0 .. sample_rate/2."""
    points = np.linspace(_mel(0.0), _mel(sample_rate / 2.0), n_filters + 2)
    bins = np.floor((n_fft + 1) * _inv_mel(points) / sample_rate).astype(int)
    bank = np.zeros((n_filters, n_fft // 2 + 1))
    for j in range(n_filters):
        lo, mid, hi = bins[j], bins[j + 1], bins[j + 2]
        for i in range(lo, mid):
            bank[j, i] = (i - lo) / max(mid - lo, 1)
        for i in range(mid, hi):
            bank[j, i] = (hi - i) / max(hi - mid, 1)
    return bank


def extract_mfcc(samples: np.ndarray, sample_rate: int,
                 config: MfccConfig = MfccConfig(),
                 recording_id: str = "") -> FeatureStream:
    """Compute MFCC features (c1..c_n_ceps, no c0, no deltas).

    Frame count is ``(len(samples) - window) // shift + 1`` for inputs of
    at least one window; shorter input raises EmptyStreamError.
    """
    if sample_rate not in (8000, 16000):
        raise ValueError(f"unsupported sample rate {sample_rate}")
    if config.n_ceps >= config.n_filters:
        raise ValueError("need n_filters > n_ceps to drop c0")
    samples = np.asarray(samples, dtype=np.float64)
    window = int(round(config.window_length * sample_rate))
    shift = int(round(config.frame_shift * sample_rate))
    if samples.size < window:
        raise EmptyStreamError(
            f"got {samples.size} samples, need at least {window} for one frame"
        )

    emphasized = np.empty_like(samples)
    emphasized[0] = samples[0]
    emphasized[1:] = samples[1:] - config.pre_emphasis * samples[:-1]

    n_frames = (samples.size - window) // shift + 1
    idx = np.arange(window)[None, :] + shift * np.arange(n_frames)[:, None]
    frames = emphasized[idx] * np.hamming(window)

    n_fft = 1
    while n_fft < window:
        n_fft *= 2
    power = np.abs(np.fft.rfft(frames, n_fft)) ** 2

    bank = _mel_filterbank(config.n_filters, n_fft, sample_rate)
    energies = np.maximum(power @ bank.T, LOG_ENERGY_FLOOR)
    ceps = dct(np.log(energies), type=2, axis=1, norm="ortho")
    feats = ceps[:, 1:config.n_ceps + 1]
    if config.lifter > 0:
        n = np.arange(1, config.n_ceps + 1)
        feats = feats * (1.0 + (config.lifter / 2.0) * np.sin(np.pi * n / config.lifter))
    return FeatureStream(
        frames=feats,
        frame_period=config.frame_shift,
        window_length=config.window_length,
        recording_id=recording_id,
    )


def write_features(path, stream: FeatureStream) -> None:
    """Serialize a stream; the value matrix is stored as float32."""
    header = _HEADER.pack(FEATURE_MAGIC, stream.dims, stream.frame_period,
                          stream.n_frames)
    body = np.ascontiguousarray(stream.frames, dtype="<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_features(path, recording_id: str | None = None) -> FeatureStream:
    """Read a feature file written by write_features."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(f"{path}: shorter than the fixed header")
    magic, dims, frame_period, n_frames = _HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dims <= 0:
        raise FormatError(f"{path}: non-positive dims {dims}")
    expected = _HEADER.size + 4 * dims * n_frames
    if len(blob) < expected:
        raise TruncatedFileError(
            f"{path}: header promises {n_frames} frames, body is short"
        )
    values = np.frombuffer(blob, dtype="<f4", count=dims * n_frames,
                           offset=_HEADER.size)
    if recording_id is None:
        recording_id = Path(path).stem
    return FeatureStream(
        frames=values.reshape(n_frames, dims).astype(np.float64),
        frame_period=frame_period,
        recording_id=recording_id,
    )


def write_features_csv(path, stream: FeatureStream) -> None:
    """Debug export: one row per frame, repr-precision floats."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"c{i + 1}" for i in range(stream.dims)])
        for row in stream.frames:
            writer.writerow([repr(v) for v in row])
