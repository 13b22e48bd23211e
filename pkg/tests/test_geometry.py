"""Alignment, hairline extraction, reference points, unit cun, mirroring."""

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faceatlas import synth
from faceatlas.errors import DegenerateFace
from faceatlas.geometry import (
    Confidence,
    LandmarkFrame,
    ReferencePoints,
    align_frame,
    extract_hairline,
    extract_reference_points,
    midline_residual,
    mirror_point,
    unit_cun,
)


def rotate_vertices(vertices, degrees, center):
    """Independent 2D rotation used as the oracle transform in tests."""
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    out = vertices.copy()
    x = vertices[:, 0] - center[0]
    y = vertices[:, 1] - center[1]
    out[:, 0] = c * x - s * y + center[0]
    out[:, 1] = s * x + c * y + center[1]
    return out


class TestAlignFrame:
    def test_upright_centered_maps_through_identity(self, frame, semantics):
        aligned = align_frame(frame, semantics)
        assert aligned.angle == pytest.approx(0.0, abs=1e-12)
        assert aligned.translation == pytest.approx([0.0, 0.0], abs=1e-12)
        assert np.allclose(aligned.vertices[:, :2], frame.vertices[:, :2], atol=1e-12)

    def test_translation_is_absorbed(self, frame, semantics):
        base = align_frame(frame, semantics)
        moved = synth.translate_frame(frame, 0.1, 0.2)
        aligned = align_frame(moved, semantics)
        assert np.allclose(aligned.vertices[:, :2], base.vertices[:, :2], atol=1e-9)

    def test_roll_is_recovered(self, frame, semantics):
        base = align_frame(frame, semantics)
        rolled_v = rotate_vertices(frame.vertices, 10.0, (0.5, 0.55))
        rolled = LandmarkFrame(frame.timestamp, frame.width, frame.height, rolled_v)
        aligned = align_frame(rolled, semantics)
        assert np.allclose(aligned.vertices[:, :2], base.vertices[:, :2], atol=1e-9)
        assert aligned.angle == pytest.approx(math.radians(-10.0), abs=1e-9)

    @pytest.mark.parametrize("theta", [-20.0, -10.0, -5.0, 5.0, 10.0, 20.0])
    @pytest.mark.parametrize("center", [(0.5, 0.55), (0.3, 0.3)])
    def test_rotation_recovery_any_center(self, frame, semantics, theta, center):
        base = align_frame(frame, semantics)
        rolled_v = rotate_vertices(frame.vertices, theta, center)
        rolled = LandmarkFrame(frame.timestamp, frame.width, frame.height, rolled_v)
        aligned = align_frame(rolled, semantics)
        assert np.allclose(aligned.vertices[:, :2], base.vertices[:, :2], atol=1e-9)

    def test_round_trip_is_identity(self, frame, semantics):
        aligned = align_frame(synth.rotate_frame_inplane(frame, 7.0), semantics)
        pts = np.array([[0.1, 0.9], [0.5, 0.5], [0.77, 0.13]])
        back = aligned.to_norm(aligned.to_aligned(pts))
        assert np.allclose(back, pts, atol=1e-12)

    def test_midline_maps_to_vertical(self, frame, semantics):
        rolled = synth.rotate_frame_inplane(frame, 13.0)
        aligned = align_frame(rolled, semantics)
        v = aligned.vertices
        brow_mid = (v[55, :2] + v[285, :2]) / 2
        assert brow_mid == pytest.approx([aligned.midline_x, 0.5], abs=1e-9)
        # the configured midline chain stays on the vertical midline
        assert midline_residual(aligned, semantics) < 1e-9

    def test_coincident_brows_degenerate(self, frame, semantics):
        v = frame.vertices.copy()
        v[285] = v[55]
        bad = LandmarkFrame(frame.timestamp, frame.width, frame.height, v)
        with pytest.raises(DegenerateFace):
            align_frame(bad, semantics)

    def test_nonsquare_frame_keeps_physical_rigidity(self, semantics):
        # the same face in a 640x480 frame: aligned distances stay in height
        # units no matter the aspect ratio
        sq = synth.synthetic_frame()
        wide = LandmarkFrame(0, 640, 480, sq.vertices)
        a_sq = align_frame(sq, semantics)
        a_wide = align_frame(wide, semantics)
        d_sq = np.linalg.norm(a_sq.vertices[55, :2] - a_sq.vertices[285, :2])
        # in the wide frame the same normalized x gap covers more physical
        # width relative to height
        d_wide = np.linalg.norm(a_wide.vertices[55, :2] - a_wide.vertices[285, :2])
        assert d_wide == pytest.approx(d_sq * (640 / 480) / 1.0, rel=1e-9)


class TestHairline:
    def test_mask_walk_finds_boundary(self, semantics):
        frame = synth.with_hair_mask(synth.synthetic_frame(), hair_below_y=0.20)
        aligned = align_frame(frame, semantics)
        pt, conf = extract_hairline(frame, aligned, semantics)
        assert conf is Confidence.MEASURED
        assert pt[0] == pytest.approx(aligned.midline_x, abs=1e-9)
        assert pt[1] == pytest.approx(0.20, abs=1.5 / frame.height)

    def test_fallback_formula_without_mask(self, frame, semantics):
        aligned = align_frame(frame, semantics)
        pt, conf = extract_hairline(frame, aligned, semantics)
        assert conf is Confidence.ESTIMATED
        # forehead-top vertex sits at aligned (0.5, 0.30); the estimate pushes
        # it on up the midline by the configured factor
        top_y = aligned.vertices[semantics.forehead_top, 1]
        expected_y = 0.5 - semantics.hairline_fallback_factor * (0.5 - top_y)
        assert pt == pytest.approx([aligned.midline_x, expected_y], abs=1e-12)
        assert pt[1] == pytest.approx(0.28, abs=1e-9)

    def test_all_false_mask_falls_back(self, frame, semantics):
        bald = LandmarkFrame(
            frame.timestamp, frame.width, frame.height, frame.vertices,
            np.zeros((frame.height, frame.width), dtype=bool),
        )
        aligned = align_frame(bald, semantics)
        pt, conf = extract_hairline(bald, aligned, semantics)
        assert conf is Confidence.ESTIMATED
        no_mask_pt, _ = extract_hairline(frame, aligned, semantics)
        assert pt == pytest.approx(no_mask_pt, abs=0)

    def test_matches_column_scan_oracle_on_random_masks(self, semantics):
        rng = np.random.default_rng(42)
        base = synth.synthetic_frame(width=64, height=64)
        aligned0 = align_frame(base, semantics)
        col = math.floor(0.5 * 64)
        start_row = math.floor(0.5 * 64)
        for _ in range(100):
            mask = rng.random((64, 64)) < 0.08
            frame = LandmarkFrame(0, 64, 64, base.vertices, mask)
            aligned = align_frame(frame, semantics)
            pt, conf = extract_hairline(frame, aligned, semantics)

            # oracle: scan the midline column upward, first hair pixel wins
            hit = None
            for row in range(start_row - 1, -1, -1):
                if mask[row, col]:
                    hit = row
                    break
            if hit is None:
                assert conf is Confidence.ESTIMATED
            else:
                assert conf is Confidence.MEASURED
                assert pt[0] == pytest.approx(aligned.midline_x, abs=0)
                assert aligned.to_norm(pt)[1] == pytest.approx((hit + 0.5) / 64, abs=1e-9)


class TestReferencePoints:
    def test_midpoint_and_centroid(self, frame, semantics):
        aligned = align_frame(frame, semantics)
        pt, conf = extract_hairline(frame, aligned, semantics)
        refs = extract_reference_points(aligned, pt, conf, semantics)
        assert refs.rhd1 == pytest.approx([0.5, 0.5], abs=1e-12)
        assert refs.rhd3_left == pytest.approx([0.42, 0.56], abs=1e-12)
        assert refs.rhd3_right == pytest.approx([0.58, 0.56], abs=1e-12)
        assert refs.rhd2 == pytest.approx([0.5, 0.28], abs=1e-9)
        assert refs.rhd3_left[0] < aligned.midline_x < refs.rhd3_right[0]

    def test_hairline_below_brows_degenerate(self, frame, semantics):
        aligned = align_frame(frame, semantics)
        with pytest.raises(DegenerateFace):
            extract_reference_points(
                aligned, np.array([0.5, 0.5]), Confidence.MEASURED, semantics
            )


class TestUnitCun:
    def _refs(self, y1, y2):
        return ReferencePoints(
            rhd1=np.array([0.5, y1]),
            rhd2=np.array([0.5, y2]),
            rhd3_left=np.array([0.42, y1 + 0.06]),
            rhd3_right=np.array([0.58, y1 + 0.06]),
            rhd2_confidence=Confidence.MEASURED,
        )

    def test_a_third_of_the_vertical_distance(self):
        refs = self._refs(0.40, 0.10)
        uc = unit_cun(refs).uc
        assert uc == abs(0.40 - 0.10) / 3.0
        assert uc == pytest.approx(0.10, abs=1e-15)

    def test_derived_distance_027(self):
        refs = self._refs(0.47, 0.20)
        uc = unit_cun(refs).uc
        assert uc == abs(0.47 - 0.20) / 3.0
        assert uc == pytest.approx(0.09, abs=1e-15)

    def test_zero_distance_degenerate(self):
        with pytest.raises(DegenerateFace):
            self._refs(0.40, 0.40)

    def test_just_below_epsilon_degenerate(self):
        with pytest.raises(DegenerateFace):
            self._refs(0.40, 0.40 - 5e-7)

    def test_invariant_under_rigid_motion(self, frame, semantics):
        def uc_of(f):
            aligned = align_frame(f, semantics)
            pt, conf = extract_hairline(f, aligned, semantics)
            return unit_cun(extract_reference_points(aligned, pt, conf, semantics)).uc

        base = uc_of(frame)
        moved = synth.translate_frame(synth.rotate_frame_inplane(frame, 17.0), 0.05, -0.08)
        assert uc_of(moved) == pytest.approx(base, abs=1e-9)


class TestMirror:
    def test_reflection(self, frame, semantics):
        aligned = align_frame(frame, semantics)
        assert mirror_point((0.55, 0.60), aligned) == pytest.approx([0.45, 0.60])

    def test_midline_fixed_point(self, frame, semantics):
        aligned = align_frame(frame, semantics)
        p = (aligned.midline_x, 0.77)
        assert mirror_point(p, aligned) == pytest.approx(list(p))

    @given(st.floats(-2, 3), st.floats(-2, 3))
    def test_involution_preserves_y(self, x, y):
        frame = synth.synthetic_frame()
        aligned = align_frame(frame, synth.default_semantics())
        p = np.array([x, y])
        q = mirror_point(mirror_point(p, aligned), aligned)
        assert q[0] == pytest.approx(x, abs=1e-12)
        assert q[1] == y


class TestFrameValidation:
    def test_wrong_vertex_count(self):
        from faceatlas.errors import FrameFormatError

        with pytest.raises(FrameFormatError):
            LandmarkFrame(0, 64, 64, np.zeros((100, 3)))

    def test_bad_dimensions(self):
        from faceatlas.errors import FrameFormatError

        with pytest.raises(FrameFormatError):
            LandmarkFrame(0, 0, 64, np.zeros((468, 3)))

    def test_mask_shape_mismatch(self):
        from faceatlas.errors import FrameFormatError

        with pytest.raises(FrameFormatError):
            LandmarkFrame(0, 64, 64, np.zeros((468, 3)), np.zeros((10, 10), dtype=bool))

    def test_non_finite_vertices_rejected(self):
        from faceatlas.errors import FrameFormatError

        v = np.zeros((468, 3))
        v[7, 1] = np.nan
        with pytest.raises(FrameFormatError):
            LandmarkFrame(0, 64, 64, v)

    def test_vertices_are_frozen(self, frame):
        with pytest.raises(ValueError):
            frame.vertices[0, 0] = 99.0
