"""Record invariants, instruction rendering, and manifest round-trips."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedbench.errors import (
    InvariantViolation,
    MalformedRecord,
    MissingFile,
    SameEmotion,
    WriteFailure,
)
from fedbench.records import (
    BenchmarkSample,
    CoarseLabel,
    EditResult,
    EmotionLabel,
    Granularity,
    ImageRef,
    ScoreCard,
    coarse_map,
    load_manifest,
    render_instruction,
    save_manifest,
    validate_results_against,
)

HEX = "0123456789abcdef"


def make_ref(path="img/a.png", w=8, h=8, salt="x"):
    digest = (salt * 64)[:64]
    digest = "".join(c if c in HEX else "a" for c in digest)
    return ImageRef(path=path, content_hash=digest, width=w, height=h)


def make_sample(i=0, src=EmotionLabel.NEUTRAL, trg=EmotionLabel.HAPPY, dense=None):
    return BenchmarkSample(
        sample_id=f"s{i}",
        source=make_ref("img/src.png"),
        src_emotion=src,
        trg_emotion=trg,
        simple_instruction=render_instruction(src, trg),
        dense_instruction=dense,
        ground_truth=make_ref("img/gt.png", salt="b"),
    )


class TestLabels:
    def test_seven_emotions(self):
        assert len(EmotionLabel) == 7
        assert {e.value for e in EmotionLabel} == {
            "angry", "disgust", "fear", "happy", "neutral", "sad", "surprise",
        }

    def test_three_polarities(self):
        assert {c.value for c in CoarseLabel} == {"positive", "neutral", "negative"}

    def test_parse_case_insensitive(self):
        assert EmotionLabel.parse(" Happy ") is EmotionLabel.HAPPY
        assert CoarseLabel.parse("NEGATIVE") is CoarseLabel.NEGATIVE

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            EmotionLabel.parse("joyful")

    def test_coarse_map_polarity_table(self):
        assert coarse_map(EmotionLabel.HAPPY) is CoarseLabel.POSITIVE
        assert coarse_map(EmotionLabel.NEUTRAL) is CoarseLabel.NEUTRAL
        for label in (EmotionLabel.ANGRY, EmotionLabel.DISGUST, EmotionLabel.FEAR,
                      EmotionLabel.SAD, EmotionLabel.SURPRISE):
            assert coarse_map(label) is CoarseLabel.NEGATIVE

    def test_coarse_map_total_and_surjective(self):
        images = {coarse_map(label) for label in EmotionLabel}
        assert images == set(CoarseLabel)
        negatives = [l for l in EmotionLabel if coarse_map(l) is CoarseLabel.NEGATIVE]
        assert len(negatives) == 5


class TestRenderInstruction:
    def test_template(self):
        assert (
            render_instruction(EmotionLabel.NEUTRAL, EmotionLabel.HAPPY)
            == "change the expression from neutral to happy"
        )

    def test_other_pair(self):
        assert (
            render_instruction(EmotionLabel.HAPPY, EmotionLabel.SAD)
            == "change the expression from happy to sad"
        )

    def test_same_emotion_rejected(self):
        with pytest.raises(SameEmotion):
            render_instruction(EmotionLabel.HAPPY, EmotionLabel.HAPPY)


class TestImageRef:
    def test_valid(self):
        make_ref().validate()

    def test_rejects_zero_dims(self):
        with pytest.raises(InvariantViolation):
            make_ref(w=0).validate()

    def test_rejects_bad_hash(self):
        with pytest.raises(InvariantViolation):
            ImageRef(path="a.png", content_hash="zz", width=2, height=2).validate()

    def test_rejects_absolute_path(self):
        with pytest.raises(InvariantViolation):
            make_ref(path="/abs/a.png").validate()


class TestBenchmarkSample:
    def test_valid(self):
        make_sample().validate()

    def test_same_emotions_rejected(self):
        sample = BenchmarkSample(
            sample_id="s",
            source=make_ref(),
            src_emotion=EmotionLabel.SAD,
            trg_emotion=EmotionLabel.SAD,
            simple_instruction="x",
            dense_instruction=None,
            ground_truth=make_ref(salt="b"),
        )
        with pytest.raises(InvariantViolation):
            sample.validate()

    def test_instruction_must_match_template(self):
        sample = BenchmarkSample(
            sample_id="s",
            source=make_ref(),
            src_emotion=EmotionLabel.SAD,
            trg_emotion=EmotionLabel.HAPPY,
            simple_instruction="make them happy",
            dense_instruction=None,
            ground_truth=make_ref(salt="b"),
        )
        with pytest.raises(InvariantViolation):
            sample.validate()

    def test_dimension_mismatch_rejected(self):
        sample = BenchmarkSample(
            sample_id="s",
            source=make_ref(w=8, h=8),
            src_emotion=EmotionLabel.SAD,
            trg_emotion=EmotionLabel.HAPPY,
            simple_instruction=render_instruction(EmotionLabel.SAD, EmotionLabel.HAPPY),
            dense_instruction=None,
            ground_truth=make_ref(w=16, h=8, salt="b"),
        )
        with pytest.raises(InvariantViolation):
            sample.validate()

    def test_instruction_by_granularity(self):
        sample = make_sample(dense="tighten the brow")
        assert sample.instruction(Granularity.SIMPLE).startswith("change the expression")
        assert sample.instruction(Granularity.DENSE) == "tighten the brow"
        with pytest.raises(InvariantViolation):
            make_sample(dense=None).instruction(Granularity.DENSE)


def make_card(i=0, **overrides):
    fields = dict(
        sample_id=f"s{i}",
        model_id="m",
        granularity=Granularity.SIMPLE,
        id_raw=0.5,
        bg_rmse=10.0,
        pq_raw=9,
        sc_raw=8,
        gta_raw=7,
        reg_ratio=1.1,
        id01=0.5,
        bg01=0.67,
        pq01=0.9,
        sc01=0.8,
        gta01=0.7,
        s_fid=0.69,
        s_align=0.75,
        s_reg=0.98,
    )
    fields.update(overrides)
    fields.setdefault("fed", fields["s_fid"] * fields["s_align"] * fields["s_reg"])
    return ScoreCard(**fields)


class TestScoreCard:
    def test_valid(self):
        make_card().validate()

    def test_fed_must_be_product(self):
        with pytest.raises(InvariantViolation):
            make_card(fed=0.9).validate()

    def test_unit_fields_bounded(self):
        with pytest.raises(InvariantViolation):
            make_card(sc01=1.5).validate()

    def test_raw_scores_integral(self):
        with pytest.raises(InvariantViolation):
            make_card(pq_raw=9.5).validate()


class TestManifestIO:
    def test_empty_file_gives_empty_list(self, tmp_path):
        path = tmp_path / "empty.manifest"
        path.write_text("")
        assert load_manifest(path, "benchmark") == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_manifest(tmp_path / "nope", "benchmark")

    def test_two_line_benchmark_fixture(self, tmp_path):
        path = tmp_path / "bench.manifest"
        save_manifest([make_sample(0), make_sample(1, src=EmotionLabel.ANGRY)], path)
        loaded = load_manifest(path, "benchmark")
        assert len(loaded) == 2
        assert loaded[0].sample_id == "s0"
        assert loaded[0].src_emotion is EmotionLabel.NEUTRAL
        assert loaded[0].trg_emotion is EmotionLabel.HAPPY
        assert loaded[1].src_emotion is EmotionLabel.ANGRY

    def test_invariant_violation_on_load(self, tmp_path):
        sample = make_sample().to_record()
        sample["trg_emotion"] = sample["src_emotion"]
        path = tmp_path / "bad.manifest"
        path.write_text(json.dumps(sample) + "\n")
        with pytest.raises(InvariantViolation):
            load_manifest(path, "benchmark")

    def test_malformed_line_number(self, tmp_path):
        path = tmp_path / "bad.manifest"
        path.write_text(json.dumps(make_sample().to_record()) + "\nnot json\n")
        with pytest.raises(MalformedRecord) as err:
            load_manifest(path, "benchmark")
        assert err.value.line_number == 2

    def test_roundtrip_empty(self, tmp_path):
        path = tmp_path / "empty.manifest"
        save_manifest([], path)
        assert path.read_text() == ""
        assert load_manifest(path, "scorecards") == []

    def test_roundtrip_mixed_scorecards(self, tmp_path):
        cards = [
            make_card(0),
            make_card(1, id_raw=-0.25, id01=0.0, granularity=Granularity.DENSE),
            make_card(2, pq_raw=0, pq01=0.0, s_fid=0.39),
        ]
        path = tmp_path / "cards.manifest"
        save_manifest(cards, path)
        assert load_manifest(path, "scorecards") == cards

    def test_unwritable_path(self, tmp_path):
        target = tmp_path / "dir"
        target.mkdir()
        with pytest.raises(WriteFailure):
            save_manifest([make_card()], target)  # path is a directory

    def test_dangling_result_rejected(self):
        result = EditResult(
            sample_id="ghost",
            model_id="m",
            granularity=Granularity.SIMPLE,
            edited=make_ref(),
        )
        with pytest.raises(InvariantViolation):
            validate_results_against([result], [make_sample()])


emotion_pairs = st.tuples(
    st.sampled_from(list(EmotionLabel)), st.sampled_from(list(EmotionLabel))
).filter(lambda pair: pair[0] != pair[1])

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def scorecards(draw):
    s_fid = draw(unit)
    s_align = draw(unit)
    s_reg = draw(unit)
    return make_card(
        i=draw(st.integers(0, 99)),
        id_raw=draw(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)),
        bg_rmse=draw(st.floats(min_value=0.0, max_value=441.0, allow_nan=False)),
        pq_raw=draw(st.integers(0, 10)),
        sc_raw=draw(st.integers(0, 10)),
        gta_raw=draw(st.integers(0, 10)),
        reg_ratio=draw(st.floats(min_value=0.0, max_value=10.0, allow_nan=False)),
        id01=draw(unit), bg01=draw(unit), pq01=draw(unit),
        sc01=draw(unit), gta01=draw(unit),
        s_fid=s_fid, s_align=s_align, s_reg=s_reg,
        fed=s_fid * s_align * s_reg,
    )


class TestRoundTripProperties:
    @settings(max_examples=50, deadline=None)
    @given(pair=emotion_pairs, idx=st.integers(0, 1000))
    def test_benchmark_roundtrip(self, pair, idx, tmp_path_factory):
        sample = make_sample(idx, src=pair[0], trg=pair[1])
        path = tmp_path_factory.mktemp("rt") / "m"
        save_manifest([sample], path)
        assert load_manifest(path, "benchmark") == [sample]

    @settings(max_examples=50, deadline=None)
    @given(card=scorecards())
    def test_scorecard_roundtrip(self, card, tmp_path_factory):
        path = tmp_path_factory.mktemp("rt") / "m"
        save_manifest([card], path)
        assert load_manifest(path, "scorecards") == [card]
