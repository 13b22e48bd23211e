"""Expression evaluation and whole-atlas evaluation."""

import numpy as np
import pytest

from faceatlas import expr as ex
from faceatlas import synth
from faceatlas.evaluator import (
    EvalEnvironment,
    Side,
    evaluate_atlas,
    evaluate_expression,
)
from faceatlas.geometry import (
    Confidence,
    CunUnit,
    LandmarkFrame,
    align_frame,
    extract_hairline,
    extract_reference_points,
    unit_cun,
)

from straightline_oracle import evaluate_sample_atlas


@pytest.fixture()
def env(frame, semantics):
    aligned = align_frame(frame, semantics)
    hairline, conf = extract_hairline(frame, aligned, semantics)
    refs = extract_reference_points(aligned, hairline, conf, semantics)
    e = EvalEnvironment(
        aligned=aligned,
        refs=refs,
        cun=CunUnit(uc=0.10),
        hairline=np.asarray(hairline),
        hairline_confidence=conf,
    )
    return e


class TestEvaluateExpression:
    def test_scaled_cun(self, env):
        e = ex.parse_expression("0.5*U")
        assert evaluate_expression(e, ex.Axis.X, env, Side.CENTER) == pytest.approx(0.05)

    def test_coordinate_lookup(self, env):
        env.insert(ex.PointId.parse("ST1"), Side.CENTER, (0.4, 0.5))
        e = ex.parse_expression("GetY(ST1)")
        assert evaluate_expression(e, ex.Axis.Y, env, Side.CENTER) == pytest.approx(0.5)

    def test_sibai_composition(self, env):
        env.insert(ex.PointId.parse("ST1"), Side.CENTER, (0.4, 0.5))
        env.insert(ex.PointId.parse("RHD3"), Side.CENTER, (0.4, 0.44))
        x = evaluate_expression(ex.parse_expression("GetX(RHD3)"), ex.Axis.X, env, Side.CENTER)
        y = evaluate_expression(
            ex.parse_expression("GetY(ST1)+0.5*U"), ex.Axis.Y, env, Side.CENTER
        )
        assert (x, y) == pytest.approx((0.40, 0.55))

    def test_negation_and_subtraction(self, env):
        e = ex.parse_expression("-(1-0.25)*U")
        assert evaluate_expression(e, ex.Axis.X, env, Side.CENTER) == pytest.approx(-0.075)

    def test_mesh_and_hairline_reads(self, env):
        x = evaluate_expression(ex.parse_expression("GetX(M4)"), ex.Axis.X, env, Side.CENTER)
        assert x == pytest.approx(env.aligned.vertices[4, 0])
        y = evaluate_expression(ex.parse_expression("GetY(M_HAIRLINE)"), ex.Axis.Y, env, Side.CENTER)
        assert y == pytest.approx(float(env.hairline[1]))


class TestEvaluateAtlas:
    def test_matches_straightline_oracle(self, sample_program, frame, semantics):
        result = evaluate_atlas(sample_program, frame, semantics)
        aligned = align_frame(frame, semantics)
        hairline, conf = extract_hairline(frame, aligned, semantics)
        refs = extract_reference_points(aligned, hairline, conf, semantics)
        uc = unit_cun(refs).uc
        expected = evaluate_sample_atlas(aligned, hairline, uc)

        assert len(result.points) == len(expected)
        for p in result.points:
            want = expected[(str(p.id), p.side.value)]
            got = aligned.to_aligned(np.asarray(p.position_norm))
            assert got == pytest.approx(list(want), abs=1e-9), f"{p.id}.{p.side.value}"

    def test_oracle_equivalence_on_perturbed_fixtures(self, sample_program, frame, semantics):
        for seed in range(50):
            f = synth.perturb_frame(frame, scale=0.004, seed=seed)
            result = evaluate_atlas(sample_program, f, semantics)
            assert not result.degenerate
            aligned = align_frame(f, semantics)
            hairline, conf = extract_hairline(f, aligned, semantics)
            refs = extract_reference_points(aligned, hairline, conf, semantics)
            uc = unit_cun(refs).uc
            expected = evaluate_sample_atlas(aligned, hairline, uc)
            for p in result.points:
                want = expected[(str(p.id), p.side.value)]
                got = aligned.to_aligned(np.asarray(p.position_norm))
                assert got == pytest.approx(list(want), abs=1e-9)

    def test_pixel_norm_consistency(self, sample_program, frame, semantics):
        result = evaluate_atlas(sample_program, frame, semantics)
        for p in result.points:
            assert p.position_norm[0] == pytest.approx(p.position_px[0] / frame.width, abs=1e-9)
            assert p.position_norm[1] == pytest.approx(p.position_px[1] / frame.height, abs=1e-9)

    def test_symmetric_pairs_mirror_exactly(self, sample_program, frame, semantics):
        aligned = align_frame(frame, semantics)
        result = evaluate_atlas(sample_program, frame, semantics)
        by_key = {(str(p.id), p.side): p for p in result.points}
        for (pid_s, side), p in by_key.items():
            if side is not Side.RIGHT:
                continue
            left = by_key[(pid_s, Side.LEFT)]
            pr = aligned.to_aligned(np.asarray(p.position_norm))
            pl = aligned.to_aligned(np.asarray(left.position_norm))
            assert pl[0] + pr[0] == pytest.approx(2 * aligned.midline_x, abs=1e-9)
            assert pl[1] == pytest.approx(pr[1], abs=1e-9)

    def test_translation_equivariance_in_pixels(self, sample_program, frame, semantics):
        base = evaluate_atlas(sample_program, frame, semantics)
        moved = evaluate_atlas(
            sample_program, synth.translate_frame(frame, 0.1, 0.1), semantics
        )
        dx, dy = 0.1 * frame.width, 0.1 * frame.height
        for b, m in zip(base.points, moved.points):
            assert m.position_px[0] - b.position_px[0] == pytest.approx(dx, abs=1e-6)
            assert m.position_px[1] - b.position_px[1] == pytest.approx(dy, abs=1e-6)

    def test_point_count_structure(self, sample_program, frame, semantics):
        result = evaluate_atlas(sample_program, frame, semantics)
        sym = sum(1 for cp in sample_program.points.values() if cp.definition.is_symmetric)
        center = len(sample_program.points) - sym
        assert len(result.points) == center + 2 * sym

    def test_confidence_monotone_without_mask(self, sample_program, frame, semantics):
        result = evaluate_atlas(sample_program, frame, semantics)
        conf = {str(p.id): p.confidence for p in result.points}
        # hairline is estimated, so the hairline row and every cun user follow
        assert conf["RHD2"] is Confidence.ESTIMATED
        for tainted in ("GB14", "ST1", "ST2", "ST3"):
            assert conf[tainted] is Confidence.ESTIMATED
        # mesh-anchored points independent of the hairline stay measured
        for clean in ("RHD1", "RHD3", "GV25", "EXHN3"):
            assert conf[clean] is Confidence.MEASURED

    def test_all_measured_with_mask(self, sample_program, semantics):
        frame = synth.with_hair_mask(synth.synthetic_frame(), hair_below_y=0.25)
        result = evaluate_atlas(sample_program, frame, semantics)
        assert all(p.confidence is Confidence.MEASURED for p in result.points)

    def test_empty_program(self, frame, semantics):
        from faceatlas.atlas import compile_atlas

        result = evaluate_atlas(compile_atlas([]), frame, semantics)
        assert result.points == ()
        assert result.degenerate is False
        assert result.uc is not None  # references still extracted

    def test_degenerate_face_yields_empty_result(self, sample_program, frame, semantics):
        v = frame.vertices.copy()
        v[:] = v[0]
        bad = LandmarkFrame(frame.timestamp, frame.width, frame.height, v)
        result = evaluate_atlas(sample_program, bad, semantics)
        assert result.degenerate is True
        assert result.points == ()
        assert result.uc is None

    def test_wire_format(self, sample_program, frame, semantics):
        doc = evaluate_atlas(sample_program, frame, semantics).as_dict()
        assert set(doc) == {"ts", "uc", "degenerate", "points"}
        entry = doc["points"][0]
        assert set(entry) == {"id", "side", "name", "channel", "px", "norm", "conf"}
        assert entry["side"] in ("C", "L", "R")


# ---------------------------------------------------------------------------
# The per-frame loop runs generated code; the public evaluate_expression is a
# recursive interpreter. Both must agree on every expression.
# ---------------------------------------------------------------------------

from hypothesis import given
from hypothesis import strategies as st

from faceatlas.evaluator import _ARGS, _emit

_leaves = st.one_of(
    st.builds(ex.Num, st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(abs)),
    st.just(ex.Cun()),
    st.builds(
        ex.Coord,
        st.sampled_from([ex.Axis.X, ex.Axis.Y]),
        st.one_of(
            st.builds(ex.MeshRef, st.integers(0, 467)),
            st.just(ex.HairlineRef()),
        ),
    ),
)
_exprs = st.recursive(
    _leaves,
    lambda kids: st.one_of(
        st.builds(ex.Neg, kids),
        st.builds(ex.Add, kids, kids),
        st.builds(ex.Sub, kids, kids),
        st.builds(ex.Mul, kids, kids),
    ),
    max_leaves=20,
)


@given(_exprs)
def test_codegen_matches_interpreter(e):
    frame = synth.synthetic_frame()
    semantics = synth.default_semantics()
    aligned = align_frame(frame, semantics)
    hairline, conf = extract_hairline(frame, aligned, semantics)
    refs = extract_reference_points(aligned, hairline, conf, semantics)
    env = EvalEnvironment(
        aligned=aligned, refs=refs, cun=CunUnit(0.085),
        hairline=np.asarray(hairline), hairline_confidence=conf,
    )
    interpreted = evaluate_expression(e, ex.Axis.X, env, Side.CENTER)

    src = _emit(e, slot_of=None, canonical_side=Side.CENTER)
    fn = eval(compile(f"lambda {_ARGS}: {src}", "<test>", "eval"))
    generated = fn(
        [], [],
        aligned.vertices[:, 0].tolist(), aligned.vertices[:, 1].tolist(),
        0.085, float(hairline[0]), float(hairline[1]),
    )
    assert generated == pytest.approx(interpreted, rel=1e-12, abs=1e-12)
