"""farfield: multichannel distant-microphone front-end toolkit.

Deterministic beamforming (delay-and-sum, mask-driven MVDR), multichannel
linear-prediction dereverberation, matched-filter corpus alignment,
overlapped-mixture synthesis, and the evaluation metrics to score them.
"""

from .align import AlignConfig, FirFilter, align_segment, apply_filter, estimate_matched_filter
from .audio_io import AudioClip, read_audio, write_audio
from .beamform import (BeamformerWeights, CovarianceEstimate, SteeringDelays, TfMask,
                       apply_weights, das, estimate_covariances, mvdr_weights)
from .dereverb import WpeConfig, WpeDiagnostics, wpe, wpe_report, wpe_time
from .manifest import (Manifest, MixtureRecipe, RecipeComponent, SegmentAnnotation,
                       parse_manifest, serialize_manifest)
from .metrics import (ScoreReport, SerResult, SotSentence, SotTranscript, WerResult,
                      normalize_words, parse_sot, ser, serialize_sot, si_sdr, si_sdri, wer)
from .mixgen import (ClipWindow, PooledClip, SceneGeometry, SpeakerInterval, SyntheticScene,
                     cut_clips, extract_nonoverlap_segments, oracle_mask, render_source,
                     sample_recipes, synth_scene, synthesize_mixtures)
from .stft import (DEFAULT_STFT, STFT_PRESETS, ComplexSpectrogram, StftConfig, istft, stft)
from .tdoa import TdoaEstimate, estimate_array_delays, gcc_phat

__version__ = "0.1.0"

__all__ = [
    "AlignConfig", "AudioClip", "BeamformerWeights", "ClipWindow", "ComplexSpectrogram",
    "CovarianceEstimate", "DEFAULT_STFT", "FirFilter", "Manifest", "MixtureRecipe",
    "PooledClip", "RecipeComponent", "STFT_PRESETS", "SceneGeometry", "ScoreReport",
    "SegmentAnnotation", "SerResult", "SotSentence", "SotTranscript", "SpeakerInterval",
    "SteeringDelays", "StftConfig", "SyntheticScene", "TdoaEstimate", "TfMask",
    "WerResult", "WpeConfig", "WpeDiagnostics", "align_segment", "apply_filter",
    "apply_weights", "cut_clips", "das", "estimate_array_delays", "estimate_covariances",
    "estimate_matched_filter", "extract_nonoverlap_segments", "gcc_phat", "istft",
    "mvdr_weights", "normalize_words", "oracle_mask", "parse_manifest", "parse_sot",
    "read_audio", "render_source", "sample_recipes", "ser", "serialize_manifest",
    "serialize_sot", "si_sdr", "si_sdri", "stft", "synth_scene", "synthesize_mixtures",
    "wer", "wpe", "wpe_report", "wpe_time", "write_audio",
]
