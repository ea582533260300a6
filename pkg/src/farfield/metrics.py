"""Scoring: scale-invariant SDR and its improvement over the unprocessed
mixture, word error rate, and sentence-level speaker error rate over
speaker-attributed transcripts.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .audio_io import AudioClip
from .errors import DegenerateInputError, ShapeError

# Residual-to-target energy ratio below which SI-SDR saturates to +inf.
PERFECT_RECONSTRUCTION_RATIO = 1e-12

SC_TOKEN = "<sc>"
SPEAKER_TAG = "speaker="

_PUNCT = re.compile(r"[^\w\s']", flags=re.UNICODE)


def si_sdr(estimate: AudioClip, reference: AudioClip) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    Projects the estimate onto the reference, then compares projected
    energy with residual energy. Perfect (scaled) reconstruction returns
    math.inf; an estimate orthogonal to the reference returns -math.inf.
    """
    if estimate.num_channels != 1 or reference.num_channels != 1:
        raise ShapeError("si_sdr expects single-channel clips")
    est = estimate.samples[0]
    ref = reference.samples[0]
    if len(est) != len(ref):
        raise ShapeError(f"length mismatch: {len(est)} vs {len(ref)}")
    ref_energy = float(ref.dot(ref))
    if ref_energy == 0.0:
        raise DegenerateInputError("reference signal has zero energy")
    alpha = float(est.dot(ref)) / ref_energy
    target = alpha * ref
    target_energy = float(target.dot(target))
    residual = est - target
    residual_energy = float(residual.dot(residual))
    if target_energy == 0.0:
        return -math.inf
    if residual_energy < PERFECT_RECONSTRUCTION_RATIO * target_energy:
        return math.inf
    return 10.0 * math.log10(target_energy / residual_energy)


def si_sdri(estimate: AudioClip, reference: AudioClip, baseline: AudioClip) -> float:
    """SI-SDR improvement over a baseline estimate of the same reference.

    By construction this is exactly 0 dB when the estimate is the baseline
    itself (the unprocessed mixture convention).
    """
    return si_sdr(estimate, reference) - si_sdr(baseline, reference)


@dataclass(frozen=True)
class WerResult:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def ref_empty(self) -> bool:
        return self.ref_words == 0

    @property
    def wer_pct(self) -> float:
        return 100.0 * self.errors / max(1, self.ref_words)


def wer(hyp: Sequence[str], ref: Sequence[str]) -> WerResult:
    """Minimum-edit-distance word error rate with unit costs.

    Ties prefer substitution/match, then deletion, so the S/D/I split is
    deterministic; S + D + I always equals the Levenshtein distance.
    """
    n_ref, n_hyp = len(ref), len(hyp)
    # cells hold (distance, S, D, I)
    prev = [(j, 0, 0, j) for j in range(n_hyp + 1)]
    for i in range(1, n_ref + 1):
        cur = [(i, 0, i, 0)] + [None] * n_hyp
        for j in range(1, n_hyp + 1):
            d_sub, s, d, ins = prev[j - 1]
            if ref[i - 1] != hyp[j - 1]:
                sub = (d_sub + 1, s + 1, d, ins)
            else:
                sub = (d_sub, s, d, ins)
            dele = (prev[j][0] + 1, prev[j][1], prev[j][2] + 1, prev[j][3])
            insr = (cur[j - 1][0] + 1, cur[j - 1][1], cur[j - 1][2], cur[j - 1][3] + 1)
            cur[j] = min(sub, dele, insr, key=lambda c: c[0])
        prev = cur
    dist, subs, dels, inss = prev[n_hyp]
    assert dist == subs + dels + inss
    return WerResult(subs, dels, inss, n_ref)


def normalize_words(text: str) -> list[str]:
    """Lowercase, strip punctuation except apostrophes, split on whitespace."""
    return _PUNCT.sub(" ", text.lower()).split()


@dataclass(frozen=True)
class SotSentence:
    speaker_id: str
    words: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if not self.words:
            raise ValueError("a transcript sentence must contain at least one word")
        if not self.speaker_id:
            raise ValueError("speaker_id must be nonempty")


@dataclass(frozen=True)
class SotTranscript:
    """Speaker-attributed sentences in first-in-first-out order."""

    sentences: tuple[SotSentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))


def parse_sot(text: str) -> SotTranscript:
    """Parse 'speaker=ID words ... <sc> speaker=ID words ...' text."""
    sentences = []
    for chunk in text.split(SC_TOKEN):
        tokens = chunk.split()
        if not tokens:
            continue
        if not tokens[0].startswith(SPEAKER_TAG):
            raise ValueError(f"sentence must begin with {SPEAKER_TAG}<id>, got {tokens[0]!r}")
        speaker = tokens[0][len(SPEAKER_TAG):]
        words = normalize_words(" ".join(tokens[1:]))
        if not words:
            raise ValueError(f"empty sentence for speaker {speaker!r}")
        sentences.append(SotSentence(speaker, tuple(words)))
    return SotTranscript(tuple(sentences))


def serialize_sot(transcript: SotTranscript) -> str:
    return f" {SC_TOKEN} ".join(
        f"{SPEAKER_TAG}{s.speaker_id} " + " ".join(s.words) for s in transcript.sentences)


@dataclass(frozen=True)
class SerResult:
    sentence_errors: int
    ref_sentences: int

    @property
    def ser_pct(self) -> float:
        if self.ref_sentences == 0:
            return 0.0
        return 100.0 * self.sentence_errors / self.ref_sentences


def ser(hyp: SotTranscript, ref: SotTranscript) -> SerResult:
    """Sentence-level speaker error rate.

    Hypothesis sentences are aligned to reference sentences by edit
    distance whose substitution cost is the normalized word-level WER of
    the sentence pair (deletion/insertion cost 1). A reference sentence
    counts as an error when its aligned hypothesis sentence carries a
    different speaker, or when it is left unaligned.
    """
    n_ref, n_hyp = len(ref.sentences), len(hyp.sentences)
    if n_ref == 0:
        return SerResult(0, 0)

    cost = np.zeros((n_ref, n_hyp))
    for i, r in enumerate(ref.sentences):
        for j, h in enumerate(hyp.sentences):
            cost[i, j] = wer(h.words, r.words).errors / max(1, len(r.words))

    INF = float("inf")
    dist = np.full((n_ref + 1, n_hyp + 1), INF)
    dist[0, :] = np.arange(n_hyp + 1)
    dist[:, 0] = np.arange(n_ref + 1)
    # 0 = substitution/match, 1 = ref deleted, 2 = hyp inserted
    move = np.zeros((n_ref + 1, n_hyp + 1), dtype=np.int8)
    move[1:, 0] = 1
    move[0, 1:] = 2
    for i in range(1, n_ref + 1):
        for j in range(1, n_hyp + 1):
            options = (
                (dist[i - 1, j - 1] + cost[i - 1, j - 1], 0),
                (dist[i - 1, j] + 1.0, 1),
                (dist[i, j - 1] + 1.0, 2),
            )
            dist[i, j], move[i, j] = min(options, key=lambda o: o[0])

    errors = 0
    i, j = n_ref, n_hyp
    while i > 0 or j > 0:
        m = move[i, j]
        if m == 0:
            if ref.sentences[i - 1].speaker_id != hyp.sentences[j - 1].speaker_id:
                errors += 1
            i, j = i - 1, j - 1
        elif m == 1:
            errors += 1  # unaligned reference sentence
            i -= 1
        else:
            j -= 1
    return SerResult(errors, n_ref)


@dataclass(frozen=True)
class ScoreReport:
    """Aggregate scores; fields are None when that modality was not scored."""

    si_sdr_db: float | None = None
    si_sdri_db: float | None = None
    wer_pct: float | None = None
    ser_pct: float | None = None
    substitutions: int | None = None
    deletions: int | None = None
    insertions: int | None = None
    sentence_errors: int | None = None
