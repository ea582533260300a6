"""Line-oriented JSON manifests connecting pipeline stages.

A manifest is UTF-8 JSON-lines: a header line carrying the schema version,
then one record per line. Records are either speech-segment annotations or
mixture recipes; both round-trip bit-exactly through serialize/parse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ManifestParseError, SchemaVersionError

SCHEMA_VERSION = 1

CHANNEL_ROLES = ("array", "headset")


@dataclass(frozen=True)
class SegmentAnnotation:
    """Who spoke when, in one source recording.

    start/end are seconds relative to the file at source_path.
    """

    recording_id: str
    speaker_id: str
    start: float
    end: float
    channel_role: str
    source_path: str

    def __post_init__(self):
        if not self.speaker_id:
            raise ValueError("speaker_id must be nonempty")
        if not (0.0 <= self.start < self.end):
            raise ValueError(f"need 0 <= start < end, got [{self.start}, {self.end}]")
        if self.channel_role not in CHANNEL_ROLES:
            raise ValueError(f"channel_role must be one of {CHANNEL_ROLES}, got {self.channel_role!r}")


@dataclass(frozen=True)
class RecipeComponent:
    clip_id: str
    speaker_id: str
    gain: float = 1.0


@dataclass(frozen=True)
class MixtureRecipe:
    """Deterministic description of one synthetic mixture."""

    mixture_id: str
    n_speakers: int
    components: tuple[RecipeComponent, ...]
    seed: int
    clip_len: float

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not (1 <= self.n_speakers <= 4):
            raise ValueError(f"n_speakers must be in 1..4, got {self.n_speakers}")
        if len(self.components) != self.n_speakers:
            raise ValueError(f"{self.n_speakers} speakers but {len(self.components)} components")
        speakers = [c.speaker_id for c in self.components]
        if len(set(speakers)) != len(speakers):
            raise ValueError(f"components must use distinct speakers, got {speakers}")


Record = SegmentAnnotation | MixtureRecipe


@dataclass(frozen=True)
class Manifest:
    records: tuple[Record, ...] = field(default_factory=tuple)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))


def _record_to_dict(record: Record) -> dict:
    if isinstance(record, SegmentAnnotation):
        return {
            "type": "segment",
            "recording_id": record.recording_id,
            "speaker_id": record.speaker_id,
            "start": record.start,
            "end": record.end,
            "channel_role": record.channel_role,
            "source_path": record.source_path,
        }
    if isinstance(record, MixtureRecipe):
        return {
            "type": "mixture",
            "mixture_id": record.mixture_id,
            "n_speakers": record.n_speakers,
            "components": [
                {"clip_id": c.clip_id, "speaker_id": c.speaker_id, "gain": c.gain}
                for c in record.components
            ],
            "seed": record.seed,
            "clip_len": record.clip_len,
        }
    raise TypeError(f"not a manifest record: {type(record).__name__}")


def _record_from_dict(obj: dict) -> Record:
    kind = obj.get("type")
    if kind == "segment":
        return SegmentAnnotation(
            recording_id=str(obj["recording_id"]),
            speaker_id=str(obj["speaker_id"]),
            start=float(obj["start"]),
            end=float(obj["end"]),
            channel_role=str(obj["channel_role"]),
            source_path=str(obj["source_path"]),
        )
    if kind == "mixture":
        return MixtureRecipe(
            mixture_id=str(obj["mixture_id"]),
            n_speakers=int(obj["n_speakers"]),
            components=tuple(
                RecipeComponent(str(c["clip_id"]), str(c["speaker_id"]), float(c.get("gain", 1.0)))
                for c in obj["components"]
            ),
            seed=int(obj["seed"]),
            clip_len=float(obj["clip_len"]),
        )
    raise ValueError(f"unknown record type {kind!r}")


def serialize_manifest(manifest: Manifest) -> str:
    lines = [json.dumps({"schema_version": manifest.schema_version}, sort_keys=True)]
    lines.extend(json.dumps(_record_to_dict(r), sort_keys=True) for r in manifest.records)
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> Manifest:
    """Parse JSON-lines manifest text; errors name the offending line."""
    lines = [ln for ln in text.splitlines()]
    # Skip trailing blank lines but keep numbering for error messages.
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        return Manifest()

    head_no, head_line = numbered[0]
    try:
        header = json.loads(head_line)
    except json.JSONDecodeError as e:
        raise ManifestParseError(head_no, f"invalid JSON: {e.msg}") from e
    if not isinstance(header, dict) or "schema_version" not in header:
        raise ManifestParseError(head_no, "first line must be a schema_version header")
    version = header["schema_version"]
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unknown schema_version {version!r}; this build reads {SCHEMA_VERSION}")

    records = []
    for line_no, line in numbered[1:]:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestParseError(line_no, f"invalid JSON: {e.msg}") from e
        try:
            records.append(_record_from_dict(obj))
        except (KeyError, TypeError, ValueError) as e:
            detail = f"missing field {e}" if isinstance(e, KeyError) else str(e)
            raise ManifestParseError(line_no, detail) from e
    return Manifest(tuple(records), version)
