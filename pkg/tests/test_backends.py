"""Mock backends, judge-reply parsing, cache behavior, retry policy."""

import threading

import numpy as np
import pytest

from fedbench.backends import (
    BackendId,
    CallCache,
    CenterBoxLocalizer,
    HashEmbedder,
    IdentityEditor,
    MeanAbsDiff,
    PatchEditor,
    ScriptedClassifier,
    ScriptedJudge,
    centered_face_box,
    parse_judge_response,
)
from fedbench.backends.base import FaceRegion
from fedbench.backends.conformance import run_conformance
from fedbench.errors import (
    BackendUnavailable,
    ClassifierParseFailure,
    EditorFailure,
    InvariantViolation,
    JudgeParseFailure,
    NoFaceFound,
    ShapeMismatch,
)
from fedbench.images import array_hash, synthetic_portrait
from fedbench.records import CoarseLabel, EmotionLabel

from conftest import make_suite


class TestParseJudgeResponse:
    @pytest.mark.parametrize(
        "text,score",
        [
            ("SCORE: 10", 10),
            ("SCORE: 7 - natural skin texture", 7),
            ("Reasoning first.\nSCORE: 0", 0),
            ("score = 4", 4),
            ("9/10", 9),
            ("I'd give 6/10 because the mouth is off", 6),
            ("8\nlooks fine", 8),
            ("SCORE: 3 but also 9/10", 3),  # marker precedence beats the fraction
            ("the rating is 12/10... no wait, 7/10", 7),  # out-of-range candidates skipped
        ],
    )
    def test_parses(self, text, score):
        assert parse_judge_response(text) == score

    @pytest.mark.parametrize("text", ["no digits here", "excellent", "", "SCORE: 15"])
    def test_failures(self, text):
        with pytest.raises(JudgeParseFailure):
            parse_judge_response(text)


class TestHashEmbedder:
    def test_deterministic_for_identical_bytes(self, portraits):
        embedder = HashEmbedder()
        a = embedder.embed_face(portraits[0])
        b = embedder.embed_face(np.array(portraits[0], copy=True))
        assert a.vector == b.vector

    def test_distinct_images_not_collinear(self, portraits):
        embedder = HashEmbedder()
        a = embedder.embed_face(portraits[0]).as_array()
        b = embedder.embed_face(portraits[1]).as_array()
        assert float(np.dot(a, b)) < 1.0

    def test_unit_norm(self, portraits):
        vec = HashEmbedder().embed_face(portraits[0]).as_array()
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-6

    def test_strict_mode_rejects_tiny_image(self):
        blank = np.zeros((1, 1, 3), dtype=np.uint8)
        with pytest.raises(NoFaceFound):
            HashEmbedder(min_side=8).embed_face(blank)


class TestCenterBoxLocalizer:
    def test_quarter_area_box(self):
        image = np.zeros((16, 16, 3), dtype=np.uint8)
        region = CenterBoxLocalizer().locate_face(image)
        x, y, w, h = region.bbox
        assert (w * h) == 64  # 25% of 256
        assert int(region.mask.sum()) == w * h

    def test_background_is_complement(self, portraits):
        region = CenterBoxLocalizer().locate_face(portraits[0])
        assert int(region.background_mask().sum()) + int(region.mask.sum()) == region.mask.size

    def test_too_small_image(self):
        with pytest.raises(NoFaceFound):
            CenterBoxLocalizer(min_side=4).locate_face(np.zeros((2, 2, 3), dtype=np.uint8))

    def test_full_image_mask_rejected(self):
        mask = np.ones((8, 8), dtype=bool)
        with pytest.raises(InvariantViolation):
            FaceRegion(bbox=(0, 0, 8, 8), mask=mask)


class TestMeanAbsDiff:
    def test_identity_zero(self, portraits):
        assert MeanAbsDiff().perceptual_distance(portraits[0], portraits[0]) == 0.0

    def test_black_vs_white(self):
        black = np.zeros((8, 8, 3), dtype=np.uint8)
        white = np.full((8, 8, 3), 255, dtype=np.uint8)
        assert MeanAbsDiff().perceptual_distance(black, white) == pytest.approx(1.0)

    def test_shape_mismatch(self):
        a = np.zeros((8, 8, 3), dtype=np.uint8)
        b = np.zeros((8, 9, 3), dtype=np.uint8)
        with pytest.raises(ShapeMismatch):
            MeanAbsDiff().perceptual_distance(a, b)


class TestEditors:
    def test_identity_editor(self, portraits):
        out = IdentityEditor().edit_image(portraits[0], "change the expression from sad to happy")
        assert np.array_equal(out, portraits[0])

    def test_patch_editor_changes_only_bbox(self, portraits):
        image = portraits[0]
        out = PatchEditor().edit_image(image, "change the expression from sad to happy")
        x, y, w, h = centered_face_box(image.shape[1], image.shape[0])
        outside = np.ones(image.shape[:2], dtype=bool)
        outside[y : y + h, x : x + w] = False
        assert np.array_equal(out[outside], image[outside])
        assert not np.array_equal(out, image)

    def test_patch_editor_instruction_specific(self, portraits):
        editor = PatchEditor()
        a = editor.edit_image(portraits[0], "change the expression from sad to happy")
        b = editor.edit_image(portraits[0], "change the expression from sad to angry")
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("editor", [IdentityEditor(), PatchEditor()])
    def test_empty_instruction(self, editor, portraits):
        with pytest.raises(EditorFailure):
            editor.edit_image(portraits[0], "  ")


class TestSuiteJudge:
    def test_scripted_score(self, suite_factory, portraits):
        suite = suite_factory(judge=ScriptedJudge("SCORE: 7 - natural skin texture"))
        verdict = suite.judge("grade this", [portraits[0]])
        assert verdict.score == 7
        assert "natural skin texture" in verdict.rationale

    def test_fraction_reply(self, suite_factory, portraits):
        suite = suite_factory(judge=ScriptedJudge("9/10"))
        assert suite.judge("grade this", [portraits[0]]).score == 9

    def test_unparseable_reply_raises_after_retries(self, suite_factory, portraits):
        judge = ScriptedJudge("no digits here")
        suite = suite_factory(judge=judge)
        with pytest.raises(JudgeParseFailure):
            suite.judge("grade this", [portraits[0]])
        assert judge.calls == 3  # bounded attempts

    def test_transient_failure_retried_with_backoff(self, tmp_path, portraits):
        attempts = []

        def flaky(prompt, images):
            attempts.append(1)
            if len(attempts) < 3:
                raise BackendUnavailable("transient")
            return "SCORE: 5"

        sleeps = []
        suite = make_suite(tmp_path / "cache", judge=ScriptedJudge(flaky),
                           sleep=sleeps.append)
        assert suite.judge("grade", [portraits[0]]).score == 5
        assert len(attempts) == 3
        assert sleeps == [1.0, 2.0]  # exponential from 1s

    def test_judge_argument_checks(self, suite_factory, portraits):
        suite = suite_factory()
        with pytest.raises(ValueError):
            suite.judge("", [portraits[0]])
        with pytest.raises(ValueError):
            suite.judge("x", [])
        with pytest.raises(ValueError):
            suite.judge("x", portraits[:4])


class TestSuiteClassifier:
    def test_scripted_table(self, suite_factory, portraits):
        table = {array_hash(portraits[0]): "happy", array_hash(portraits[1]): "sad"}
        member = ScriptedClassifier(table)
        suite = suite_factory(classifiers=[member])
        assert suite.classify_expression(portraits[0], "fine") is EmotionLabel.HAPPY
        assert suite.classify_expression(portraits[1], "fine") is EmotionLabel.SAD

    def test_coarse_request_on_fine_only_backend(self, suite_factory, portraits):
        member = ScriptedClassifier("disgust", granularities=("fine",))
        suite = suite_factory(classifiers=[member])
        # classifier answers fine, the wrapper applies the polarity map
        assert suite.classify_expression(portraits[0], "coarse") is CoarseLabel.NEGATIVE

    def test_unparseable_reply(self, suite_factory, portraits):
        suite = suite_factory(classifiers=[ScriptedClassifier("cheerful")])
        with pytest.raises(ClassifierParseFailure):
            suite.classify_expression(portraits[0], "fine")

    def test_reply_normalization(self, suite_factory, portraits):
        suite = suite_factory(classifiers=[ScriptedClassifier(" Happy. ")])
        assert suite.classify_expression(portraits[0], "fine") is EmotionLabel.HAPPY


class TestCallCache:
    def test_identical_judge_calls_invoke_once(self, suite_factory, portraits):
        judge = ScriptedJudge("SCORE: 7")
        suite = suite_factory(judge=judge)
        suite.judge("same prompt", [portraits[0]])
        suite.judge("same prompt", [portraits[0]])
        assert judge.calls == 1

    def test_changed_prompt_is_a_new_key(self, suite_factory, portraits):
        judge = ScriptedJudge("SCORE: 7")
        suite = suite_factory(judge=judge)
        suite.judge("prompt one", [portraits[0]])
        suite.judge("prompt two", [portraits[0]])
        assert judge.calls == 2

    def test_cache_transparency(self, tmp_path, portraits):
        cold = make_suite(None)  # NullCache: straight through
        warm = make_suite(tmp_path / "cache")
        direct = cold.embed_face(portraits[0])
        cached_first = warm.embed_face(portraits[0])
        cached_second = warm.embed_face(portraits[0])
        assert direct.vector == cached_first.vector == cached_second.vector

    def test_corrupted_entry_recomputed_and_repaired(self, tmp_path, portraits):
        cache = CallCache(tmp_path / "cache")
        judge = ScriptedJudge("SCORE: 7")
        suite = make_suite(None)
        suite.cache = cache
        suite.judge_backend = judge
        suite.judge("prompt", [portraits[0]])
        entries = list((tmp_path / "cache").rglob("*"))
        files = [p for p in entries if p.is_file()]
        assert len(files) == 1
        files[0].write_bytes(b"garbage")
        verdict = suite.judge("prompt", [portraits[0]])
        assert verdict.score == 7
        assert judge.calls == 2
        assert cache.corruptions == 1
        # the entry was repaired: a third call hits the cache again
        suite.judge("prompt", [portraits[0]])
        assert judge.calls == 2

    def test_concurrent_identical_calls_compute_once(self, tmp_path, portraits):
        calls = []
        lock = threading.Lock()

        def slow(prompt, images):
            with lock:
                calls.append(1)
            return "SCORE: 4"

        suite = make_suite(tmp_path / "cache", judge=ScriptedJudge(slow))
        threads = [
            threading.Thread(target=lambda: suite.judge("p", [portraits[0]]))
            for _ in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(calls) == 1

    def test_cache_key_distinguishes_backend_version(self, tmp_path, portraits):
        cache = CallCache(tmp_path / "cache")
        one = ScriptedJudge("SCORE: 1", version="a")
        two = ScriptedJudge("SCORE: 2", version="b")
        s1 = make_suite(None, judge=one)
        s1.cache = cache
        s2 = make_suite(None, judge=two)
        s2.cache = cache
        assert s1.judge("p", [portraits[0]]).score == 1
        assert s2.judge("p", [portraits[0]]).score == 2


class TestConformance:
    def test_mock_suite_passes(self, portraits):
        failures = run_conformance(
            embedder=HashEmbedder(),
            localizer=CenterBoxLocalizer(),
            perceptual=MeanAbsDiff(),
            editor=PatchEditor(),
            images=portraits,
        )
        assert failures == []

    def test_broken_perceptual_caught(self, portraits):
        class Lying:
            backend_id = BackendId("perceptual", "lying", "1")

            def perceptual_distance(self, a, b):
                return 0.5 if array_hash(a) < array_hash(b) else 0.25

        failures = run_conformance(perceptual=Lying(), images=portraits)
        assert any("asymmetric" in f or "d(X, X)" in f for f in failures)
