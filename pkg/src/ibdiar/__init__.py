"""Unsupervised speaker diarization via information-bottleneck clustering.

Pipeline variants: single-pass clustering over fixed- or phoneme-rate
segment initializations, and two-pass variants that re-cluster latent
features from a recording-specific discriminator (shallow network, LDA,
or a fusion of both).
"""

from .aib import IbState, StoppingRule, init_ib_state, merge_delta, run_aib
from .backend import BACKEND_NAME
from .diarization import Diarization, DiarizationEntry, read_rttm, write_rttm
from .features import FeatureStream, MfccConfig, decode_wav, extract_mfcc
from .fusion import FusionWeights, fuse_posteriors
from .gmm import GmmModel, PosteriorMatrix, estimate_gmm, frame_posteriors
from .pipeline import MODES, DiarizeResult, PipelineConfig, diarize
from .realign import kl_hmm_realign
from .scoring import ScoreReport, compute_ser
from .segmentation import (
    PhonemeBoundaryList,
    SegmentList,
    SpeechMask,
    fixed_length_init,
    varying_length_init,
)
from .synth import SynthSpec, brute_force_reference, synth_conversation

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "Diarization",
    "DiarizationEntry",
    "DiarizeResult",
    "FeatureStream",
    "FusionWeights",
    "GmmModel",
    "IbState",
    "MODES",
    "MfccConfig",
    "PhonemeBoundaryList",
    "PipelineConfig",
    "PosteriorMatrix",
    "ScoreReport",
    "SegmentList",
    "SpeechMask",
    "StoppingRule",
    "SynthSpec",
    "brute_force_reference",
    "compute_ser",
    "decode_wav",
    "diarize",
    "estimate_gmm",
    "extract_mfcc",
    "fixed_length_init",
    "frame_posteriors",
    "fuse_posteriors",
    "init_ib_state",
    "kl_hmm_realign",
    "merge_delta",
    "read_rttm",
    "run_aib",
    "synth_conversation",
    "varying_length_init",
    "write_rttm",
    "__version__",
]
