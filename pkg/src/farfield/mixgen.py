"""Mixture generation: single-speaker interval extraction, fixed-length clip
cutting, deterministic synthesis of overlapped far-field mixtures with
aligned references, and the synthetic-scene generator used by the tests.

The mixture path mirrors the corpus construction it is meant for: take the
stretches where exactly one speaker talks, cut them into fixed-length
clips, then overlap randomly chosen clips from 1 to 4 distinct speakers.
The mixture is the sample-exact sum of the far-field clips; the reference
is the sum of the corresponding aligned close-talk clips.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .audio_io import AudioClip
from .beamform import TfMask
from .errors import ConfigError, PoolError, ShapeError
from .manifest import Manifest, MixtureRecipe, RecipeComponent, SegmentAnnotation
from .stft import DEFAULT_STFT, StftConfig, stft

DEFAULT_CLIP_LEN = 4.0

# Uniform over 1..4 overlapped speakers unless configured otherwise.
DEFAULT_SPEAKER_COUNT_WEIGHTS = (0.25, 0.25, 0.25, 0.25)


@dataclass(frozen=True)
class SpeakerInterval:
    """Maximal stretch during which exactly one speaker is active."""

    speaker_id: str
    start: float
    end: float


@dataclass(frozen=True)
class ClipWindow:
    """One fixed-length cut out of a speaker interval."""

    speaker_id: str
    start: float
    end: float


@dataclass(frozen=True)
class PooledClip:
    """A far-field clip plus its aligned single-channel reference."""

    clip_id: str
    speaker_id: str
    array: AudioClip
    reference: AudioClip


def extract_nonoverlap_segments(annotations: Sequence[SegmentAnnotation]) -> list[SpeakerInterval]:
    """Maximal intervals where exactly one speaker is active.

    Computed on event boundaries with half-open [start, end) semantics.
    Duplicate annotations of the same span (e.g. one per channel role) do
    not affect the result, since activity counts distinct speakers.
    """
    if not annotations:
        return []
    boundaries = sorted({t for a in annotations for t in (a.start, a.end)})
    intervals: list[SpeakerInterval] = []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        active = {a.speaker_id for a in annotations if a.start <= lo and hi <= a.end}
        if len(active) != 1:
            continue
        speaker = next(iter(active))
        if intervals and intervals[-1].speaker_id == speaker and intervals[-1].end == lo:
            intervals[-1] = SpeakerInterval(speaker, intervals[-1].start, hi)
        else:
            intervals.append(SpeakerInterval(speaker, lo, hi))
    return intervals


def cut_clips(interval: SpeakerInterval, clip_len: float = DEFAULT_CLIP_LEN) -> list[ClipWindow]:
    """Consecutive non-overlapping clips of exactly clip_len seconds.

    The trailing remainder shorter than clip_len is dropped.
    """
    if clip_len <= 0.0:
        raise ConfigError(f"clip_len must be positive, got {clip_len}")
    # Small epsilon absorbs float dust in (end - start) / clip_len.
    count = int((interval.end - interval.start) / clip_len + 1e-9)
    return [
        ClipWindow(interval.speaker_id,
                   interval.start + k * clip_len,
                   interval.start + (k + 1) * clip_len)
        for k in range(count)
    ]


def sample_recipes(
    pool: Sequence[PooledClip],
    count: int,
    seed: int,
    speaker_count_weights: Sequence[float] = DEFAULT_SPEAKER_COUNT_WEIGHTS,
) -> list[MixtureRecipe]:
    """Draw mixture recipes from one seeded generator, sequentially.

    Each recipe picks a speaker count from the configured distribution,
    then distinct speakers, then one clip per speaker. Clips of the same
    speaker never co-occur in a recipe.
    """
    weights = np.asarray(speaker_count_weights, dtype=np.float64)
    if weights.shape != (4,) or weights.min() < 0.0 or weights.sum() <= 0.0:
        raise ConfigError("speaker_count_weights must be 4 nonnegative values")
    weights = weights / weights.sum()

    by_speaker: dict[str, list[str]] = {}
    clip_len_by_id: dict[str, float] = {}
    for clip in pool:
        by_speaker.setdefault(clip.speaker_id, []).append(clip.clip_id)
        clip_len_by_id[clip.clip_id] = clip.array.duration
    speakers = sorted(by_speaker)
    max_speakers = max(i + 1 for i, w in enumerate(weights) if w > 0.0)
    if len(speakers) < max_speakers:
        raise PoolError(
            f"pool has {len(speakers)} distinct speakers; "
            f"need at least {max_speakers} for the configured speaker counts")

    rng = np.random.default_rng(seed)
    recipes = []
    for k in range(count):
        n = int(rng.choice(4, p=weights)) + 1
        chosen = rng.choice(len(speakers), size=n, replace=False)
        components = []
        for idx in sorted(chosen):
            speaker = speakers[idx]
            clip_id = by_speaker[speaker][int(rng.integers(len(by_speaker[speaker])))]
            components.append(RecipeComponent(clip_id, speaker, 1.0))
        recipes.append(MixtureRecipe(
            mixture_id=f"mix{k:05d}",
            n_speakers=n,
            components=tuple(components),
            seed=seed,
            clip_len=clip_len_by_id[components[0].clip_id],
        ))
    return recipes


def render_mixture(recipe: MixtureRecipe, pool: Sequence[PooledClip]) \
        -> tuple[AudioClip, AudioClip]:
    """Sample-exact sums of the recipe's array clips and reference clips."""
    by_id = {clip.clip_id: clip for clip in pool}
    try:
        clips = [by_id[c.clip_id] for c in recipe.components]
    except KeyError as e:
        raise PoolError(f"recipe {recipe.mixture_id} references unknown clip {e}") from e
    mixture = np.zeros_like(clips[0].array.samples)
    reference = np.zeros_like(clips[0].reference.samples)
    for component, clip in zip(recipe.components, clips):
        mixture += component.gain * clip.array.samples
        reference += component.gain * clip.reference.samples
    rate = clips[0].array.sample_rate
    return AudioClip(mixture, rate), AudioClip(reference, rate)


def synthesize_mixtures(
    pool: Sequence[PooledClip],
    count: int,
    channels: int,
    seed: int,
    speaker_count_weights: Sequence[float] = DEFAULT_SPEAKER_COUNT_WEIGHTS,
) -> tuple[list[AudioClip], list[AudioClip], Manifest]:
    """Deterministically synthesize `count` mixtures from the clip pool.

    Returns (mixtures, references, recipe manifest); identical seeds give
    bit-identical outputs.
    """
    if not pool:
        raise PoolError("clip pool is empty")
    rates = {c.array.sample_rate for c in pool} | {c.reference.sample_rate for c in pool}
    if len(rates) != 1:
        raise PoolError(f"pool mixes sample rates {sorted(rates)}")
    lengths = {c.array.num_samples for c in pool} | {c.reference.num_samples for c in pool}
    if len(lengths) != 1:
        raise PoolError(f"pool clips have unequal lengths {sorted(lengths)}")
    bad = [c.clip_id for c in pool if c.array.num_channels != channels]
    if bad:
        raise PoolError(f"clips {bad[:3]} do not have {channels} channels")
    if any(c.reference.num_channels != 1 for c in pool):
        raise PoolError("reference clips must be single-channel")

    recipes = sample_recipes(pool, count, seed, speaker_count_weights)
    mixtures, references = [], []
    for recipe in recipes:
        mixture, reference = render_mixture(recipe, pool)
        mixtures.append(mixture)
        references.append(reference)
    return mixtures, references, Manifest(tuple(recipes))


@dataclass(frozen=True)
class SceneGeometry:
    """Per-channel propagation: delay in samples (fractional ok) and gain."""

    delays: np.ndarray
    decays: np.ndarray

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=np.float64)
        decays = np.asarray(self.decays, dtype=np.float64)
        if delays.ndim != 1 or delays.shape != decays.shape:
            raise ShapeError("delays and decays must be 1-D arrays of equal length")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "decays", decays)

    @property
    def num_channels(self) -> int:
        return len(self.delays)


@dataclass(frozen=True)
class SyntheticScene:
    """Rendered test scene with every ground-truth quantity retained."""

    mixture: AudioClip
    dry_sources: tuple[AudioClip, ...]
    clean: AudioClip
    noise: AudioClip
    mask: TfMask


def delay_signal(signal: np.ndarray, delay: float) -> np.ndarray:
    """Circular shift by an integer or fractional number of samples."""
    if float(delay).is_integer():
        return np.roll(signal, int(delay))
    n = len(signal)
    bins = np.arange(n // 2 + 1)
    return np.fft.irfft(np.fft.rfft(signal) * np.exp(-2j * np.pi * bins * delay / n), n)


def render_source(source: AudioClip, geometry: SceneGeometry) -> AudioClip:
    """Propagate a single-channel source through the scene geometry."""
    if source.num_channels != 1:
        raise ShapeError("sources must be single-channel")
    sig = source.samples[0]
    channels = np.stack([
        gain * delay_signal(sig, d) for d, gain in zip(geometry.delays, geometry.decays)
    ])
    return AudioClip(channels, source.sample_rate)


def oracle_mask(clean: AudioClip, noise: AudioClip,
                config: StftConfig = DEFAULT_STFT) -> TfMask:
    """Binary speech mask: 1 where the clean energy dominates the noise."""
    if clean.num_channels != 1 or noise.num_channels != 1:
        raise ShapeError("oracle_mask expects single-channel clean and noise clips")
    clean_power = np.abs(stft(clean, config).data[0]) ** 2
    noise_power = np.abs(stft(noise, config).data[0]) ** 2
    return TfMask((clean_power > noise_power).astype(np.float64), role="speech")


def synth_scene(
    geometry: SceneGeometry,
    sources: Sequence[AudioClip],
    snr_db: float | None,
    seed: int,
    stft_config: StftConfig = DEFAULT_STFT,
) -> SyntheticScene:
    """Render sources through the geometry and add white noise.

    Every channel is the superposition of the delayed and decayed sources
    plus white Gaussian noise scaled so the scene-level signal-to-noise
    ratio is exactly snr_db (pass None for a noiseless scene). The oracle
    mask marks bins where total source energy dominates the noise at the
    reference channel 0.
    """
    if not sources:
        raise ShapeError("need at least one source")
    rates = {s.sample_rate for s in sources}
    lengths = {s.num_samples for s in sources}
    if len(rates) != 1 or len(lengths) != 1:
        raise ShapeError("sources must share sample rate and length")
    n = lengths.pop()
    if np.max(np.abs(geometry.delays)) > n / 2:
        raise ConfigError("delays must stay within half the scene length")

    renders = [render_source(s, geometry) for s in sources]
    clean = np.zeros((geometry.num_channels, n))
    for r in renders:
        clean += r.samples

    rng = np.random.default_rng(seed)
    if snr_db is None:
        noise = np.zeros_like(clean)
    else:
        noise = rng.standard_normal(clean.shape)
        target_power = np.mean(clean**2) / 10.0 ** (snr_db / 10.0)
        noise *= np.sqrt(target_power * noise.size / np.sum(noise**2))

    rate = sources[0].sample_rate
    clean_clip = AudioClip(clean, rate)
    noise_clip = AudioClip(noise, rate)
    mask = oracle_mask(clean_clip.channel(0), noise_clip.channel(0), stft_config) \
        if snr_db is not None else TfMask(np.ones(
            stft(clean_clip.channel(0), stft_config).data[0].shape), role="speech")
    return SyntheticScene(
        mixture=AudioClip(clean + noise, rate),
        dry_sources=tuple(sources),
        clean=clean_clip,
        noise=noise_clip,
        mask=mask,
    )
