import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nirvitals.core import Rect
from nirvitals.errors import ValidationError
from nirvitals.resize import to_uint8, resize
from nirvitals.roi import (
    TEMPLATE_SHAPE,
    Template,
    amad_map,
    build_template,
    detect_neck,
    expand_breathing_roi,
    load_template,
    mad_map,
    save_template,
)

from oracles import amad_brute, brute_detect, mad_brute, paste_scene


class TestBuildTemplate:
    def test_single_native_crop_unchanged(self):
        crop = np.random.default_rng(0).integers(0, 256, TEMPLATE_SHAPE, dtype=np.uint8)
        np.testing.assert_array_equal(build_template([crop]).pixels, crop)

    def test_two_constants_average(self):
        t = build_template([np.full((30, 100), 100), np.full((10, 50), 200)])
        assert t.shape == TEMPLATE_SHAPE and np.all(t.pixels == 150)

    def test_many_random_crops_match_pixelwise_mean(self):
        rng = np.random.default_rng(3)
        crops = [rng.integers(0, 256, TEMPLATE_SHAPE) for _ in range(48)]
        expected = np.round(np.mean(np.stack(crops).astype(float), axis=0))
        assert np.max(np.abs(build_template(crops).pixels.astype(float) - expected)) <= 0.5

    def test_empty(self):
        with pytest.raises(ValidationError):
            build_template([])

    def test_save_load(self, tmp_path):
        t = build_template([np.full(TEMPLATE_SHAPE, 77)])
        save_template(t, tmp_path / "t")
        np.testing.assert_array_equal(load_template(tmp_path / "t").pixels, t.pixels)


def test_packaged_template_shape(template):
    assert template.shape == TEMPLATE_SHAPE
    assert template.pixels.dtype == np.uint8


class TestMad:
    def test_self_match(self):
        t = np.random.default_rng(0).integers(0, 256, TEMPLATE_SHAPE)
        np.testing.assert_array_equal(mad_map(t, Template(t.astype(np.uint8))), [[0.0]])

    def test_constant_difference(self):
        m = mad_map(np.full((4, 5), 10), np.array([[8]]))
        assert m.shape == (4, 5) and np.all(m == 2.0)

    def test_row(self):
        np.testing.assert_array_equal(mad_map(np.array([[0, 10, 0]]), np.array([[0]])), [[0, 10, 0]])

    def test_template_too_large(self):
        with pytest.raises(ValidationError):
            mad_map(np.zeros((3, 3)), np.zeros((4, 1)))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        s = rng.integers(0, 256, (rng.integers(3, 12), rng.integers(3, 12)))
        t = rng.integers(0, 256, (rng.integers(1, s.shape[0] + 1), rng.integers(1, s.shape[1] + 1)))
        got = mad_map(s, t)
        np.testing.assert_allclose(got, mad_brute(s, t), rtol=0, atol=1e-12)
        assert np.all(got >= 0)


class TestAmad:
    def test_constant(self):
        np.testing.assert_allclose(amad_map(np.full((2, 3), 2.0)), -6.0)

    def test_row(self):
        np.testing.assert_allclose(amad_map(np.array([[0.0, 10.0, 0.0]])),
                                   [[-40 / 3, -10 / 3, -40 / 3]])

    @given(st.floats(-50, 50), st.integers(0, 2 ** 16))
    def test_row_shift(self, c, seed):
        mad = np.random.default_rng(seed).uniform(0, 20, (4, 6))
        shifted = mad.copy()
        shifted[2] += c
        diff = amad_map(shifted) - amad_map(mad)
        np.testing.assert_allclose(diff[2], -3 * c, atol=1e-9)
        np.testing.assert_allclose(np.delete(diff, 2, axis=0), 0, atol=1e-12)


class TestDetect:
    def test_pasted_native(self, template):
        frame = np.full((240, 320), 230, np.uint8)
        frame[40:59, 100:181] = template.pixels
        m = detect_neck(frame, template)
        assert m.rect == Rect(40, 100, 19, 81) and m.scale == 1.0

    def test_pasted_scaled(self, template):
        frame = np.full((120, 240), 230, np.uint8)
        small = template.scaled(0.8).pixels
        frame[30:30 + small.shape[0], 60:60 + small.shape[1]] = small
        m = detect_neck(frame, template)
        assert m.scale == 0.8 and m.rect == Rect(30, 60, 16, 65)

    def test_translation_equivariance(self, template):
        frame = np.full((120, 240), 230, np.uint8)
        frame[40:59, 50:131] = template.pixels
        a = detect_neck(frame, template)
        b = detect_neck(np.roll(np.roll(frame, 7, axis=0), 11, axis=1), template)
        assert (b.rect.top - a.rect.top, b.rect.left - a.rect.left) == (7, 11)

    def test_tie_prefers_first_scale_then_top_left(self):
        frame = np.zeros((10, 10), np.uint8)
        m = detect_neck(frame, Template(np.zeros((5, 5), np.uint8)))
        assert m.scale == 1.0 and (m.rect.top, m.rect.left) == (0, 0)

    def test_frame_too_small(self, template):
        with pytest.raises(ValidationError):
            detect_neck(np.zeros((10, 50), np.uint8), template)

    def test_random_cases_match_brute_force(self, template):
        rng = np.random.default_rng(11)
        small = Template(to_uint8(resize(template.pixels, (8, 24))))
        for _ in range(25):
            frame, _, _ = paste_scene(rng, small, float(rng.choice([1.0, 0.8])), (20, 50))
            m = detect_neck(frame, small)
            key, rect, scale = brute_detect(frame, small)
            assert (m.rect, m.scale) == (rect, scale)
            assert m.score == pytest.approx(key[0], abs=1e-9)

    def test_simulated_scene(self, clean_scene, template):
        spec, seq, _ = clean_scene
        m = detect_neck(seq.frames[0], template)
        assert m.scale == 1.0
        assert m.rect == spec.layout().neck_rect


class TestExpand:
    def test_five_heights_centred(self):
        assert expand_breathing_roi(Rect(40, 10, 19, 81), 240, 320) == Rect(2, 10, 95, 81)

    def test_clamped_at_top(self):
        r = expand_breathing_roi(Rect(0, 0, 19, 81), 240, 320)
        assert r.top == 0 and r.height == 57

    def test_exact_fit(self):
        assert expand_breathing_roi(Rect(38, 5, 19, 30), 95, 40) == Rect(0, 5, 95, 30)
