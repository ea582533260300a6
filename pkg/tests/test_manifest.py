import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farfield import (Manifest, MixtureRecipe, RecipeComponent, SegmentAnnotation,
                      parse_manifest, serialize_manifest)
from farfield.errors import ManifestParseError, SchemaVersionError

ids = st.text(alphabet="abcdefghij0123456789_-", min_size=1, max_size=12)
times = st.floats(min_value=0.0, max_value=1e4, allow_nan=False, width=64)


@st.composite
def segment_records(draw):
    start = draw(times)
    end = start + draw(st.floats(min_value=1e-3, max_value=100.0))
    return SegmentAnnotation(
        recording_id=draw(ids),
        speaker_id=draw(ids),
        start=start,
        end=end,
        channel_role=draw(st.sampled_from(["array", "headset"])),
        source_path=draw(ids) + ".wav",
    )


@st.composite
def mixture_records(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    speakers = draw(st.lists(ids, min_size=n, max_size=n, unique=True))
    components = tuple(
        RecipeComponent(draw(ids), spk, draw(st.floats(0.1, 2.0))) for spk in speakers)
    return MixtureRecipe(
        mixture_id=draw(ids),
        n_speakers=n,
        components=components,
        seed=draw(st.integers(0, 2**31 - 1)),
        clip_len=draw(st.floats(min_value=0.5, max_value=10.0)),
    )


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(segment_records(), mixture_records()), max_size=8))
def test_roundtrip_is_identity(records):
    manifest = Manifest(tuple(records))
    assert parse_manifest(serialize_manifest(manifest)) == manifest


def test_empty_input_gives_empty_manifest():
    assert parse_manifest("") == Manifest()
    assert parse_manifest("\n\n") == Manifest()


def test_single_annotation_line():
    record = SegmentAnnotation("rec1", "spkA", 0.5, 2.0, "array", "rec1.wav")
    manifest = parse_manifest(serialize_manifest(Manifest((record,))))
    assert len(manifest.records) == 1
    assert manifest.records[0] == record


def test_end_before_start_names_the_line():
    good = serialize_manifest(Manifest((SegmentAnnotation("r", "s", 0.0, 1.0, "array", "x.wav"),)))
    bad_line = ('{"type": "segment", "recording_id": "r", "speaker_id": "s", '
                '"start": 5.0, "end": 1.0, "channel_role": "array", "source_path": "x.wav"}')
    with pytest.raises(ManifestParseError) as err:
        parse_manifest(good + bad_line + "\n")
    assert err.value.line == 3


def test_unknown_schema_version():
    with pytest.raises(SchemaVersionError):
        parse_manifest('{"schema_version": 99}\n')


def test_invalid_json_names_the_line():
    with pytest.raises(ManifestParseError) as err:
        parse_manifest('{"schema_version": 1}\n{nonsense\n')
    assert err.value.line == 2


def test_unknown_record_type():
    with pytest.raises(ManifestParseError):
        parse_manifest('{"schema_version": 1}\n{"type": "wat"}\n')


def test_duplicate_speaker_in_recipe_rejected():
    with pytest.raises(ValueError):
        MixtureRecipe("m", 2, (RecipeComponent("c1", "spk", 1.0),
                               RecipeComponent("c2", "spk", 1.0)), 0, 4.0)


def test_component_count_must_match_speaker_count():
    with pytest.raises(ValueError):
        MixtureRecipe("m", 2, (RecipeComponent("c1", "a", 1.0),), 0, 4.0)
