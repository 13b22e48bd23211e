"""Atlas parsing, compilation, classification, census."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faceatlas import expr as ex
from faceatlas.atlas import (
    Census,
    Complexity,
    census,
    compile_atlas,
    format_census_table,
    parse_atlas,
)
from faceatlas.errors import (
    AtlasFileError,
    AtlasParseError,
    BadHeader,
    CycleError,
    DimensionError,
    SideAccessError,
    UndefinedReference,
)
from faceatlas.synth import make_bench_atlas

HEADER = "Channel,ID,NameE,Region,FaceMeshX,FaceMeshY,IsSymmetry,Comments"


def atlas(*rows: str) -> str:
    return "\n".join([HEADER, *rows]) + "\n"


# ---------------------------------------------------------------------------
# Brute-force complexity oracle: maximum proportional-derivation depth.
# Mesh vertices contribute 0; cun and the hairline are one derivation step;
# referencing a point adds a step on top of that point's depth.
# depth 0 -> direct, 1 -> one_time, >= 2 -> multi_time.
# ---------------------------------------------------------------------------

def depth_oracle(defs):
    by_id = {d.id: d for d in defs}
    memo = {}

    def point_depth(pid):
        if pid not in memo:
            d = by_id[pid]
            memo[pid] = max(expr_depth(d.expr_x), expr_depth(d.expr_y))
        return memo[pid]

    def expr_depth(e):
        if isinstance(e, ex.Num):
            return 0
        if isinstance(e, ex.Cun):
            return 1
        if isinstance(e, ex.Coord):
            r = e.ref
            if isinstance(r, ex.MeshRef):
                return 0
            if isinstance(r, ex.HairlineRef):
                return 1
            return 1 + point_depth(r.point)
        if isinstance(e, ex.Neg):
            return expr_depth(e.operand)
        return max(expr_depth(e.left), expr_depth(e.right))

    classes = {}
    for d in defs:
        depth = point_depth(d.id)
        classes[d.id] = (
            Complexity.DIRECT if depth == 0
            else Complexity.ONE_TIME if depth == 1
            else Complexity.MULTI_TIME
        )
    return classes


class TestParseAtlas:
    def test_sibai_row(self):
        text = atlas(
            "ST,1,Chengqi,eye,GetX(M4),GetY(M4),TRUE,-",
            "ST,2,Sibai,eye,GetX(RHD3),GetY(ST1)+0.5*U,TRUE,-",
            "RHD,3,Pupil,eye,GetX(M263),GetY(M263),TRUE,-",
        )
        defs = parse_atlas(text)
        sibai = defs[1]
        assert str(sibai.id) == "ST2"
        assert sibai.name_en == "Sibai"
        assert sibai.region == "eye"
        assert sibai.is_symmetric is True
        assert sibai.comments == ""
        assert sibai.expr_y == ex.parse_expression("GetY(ST1)+0.5*U")

    def test_empty_file_with_header(self):
        assert parse_atlas(HEADER + "\n") == []

    def test_duplicate_id(self):
        text = atlas(
            "ST,2,Sibai,eye,GetX(M1),GetY(M1),TRUE,-",
            "ST,2,Other,eye,GetX(M2),GetY(M2),TRUE,-",
        )
        with pytest.raises(AtlasParseError) as e:
            parse_atlas(text)
        assert "duplicate identifier ST2" in str(e.value)

    def test_missing_and_extra_header_columns(self):
        with pytest.raises(BadHeader) as e:
            parse_atlas("Channel,ID,NameE,Region,FaceMeshX,FaceMeshY,IsSymmetry,Notes\nST,1,A,x,U,U,TRUE,-\n")
        assert "Comments" in e.value.missing
        assert "Notes" in e.value.extra

    def test_empty_input(self):
        with pytest.raises(BadHeader):
            parse_atlas("")

    def test_batch_diagnostics_not_fail_fast(self):
        text = atlas(
            "ST,1,Chengqi,eye,GetX(M4,GetY(M4),TRUE,-",     # bad expression
            "st,2,Sibai,eye,GetX(M4),GetY(M4),TRUE,-",      # bad channel case
            "GB,14,Yangbai,brow,GetX(M4),GetY(M4),MAYBE,-", # bad symmetry flag
            "LI,20,Yingxiang,nose,GetX(M4),GetY(M4),FALSE,-",
        )
        with pytest.raises(AtlasParseError) as e:
            parse_atlas(text)
        lines = [err.line for err in e.value.errors]
        assert lines == [2, 3, 4]

    def test_symmetry_flag_case_insensitive(self):
        defs = parse_atlas(atlas("ST,1,A,eye,GetX(M1),GetY(M1),tRuE,-"))
        assert defs[0].is_symmetric

    def test_quoted_fields(self):
        defs = parse_atlas(atlas('ST,1,"Cheng, qi",eye,GetX(M1),GetY(M1),FALSE,"say ""hi"""'))
        assert defs[0].name_en == "Cheng, qi"
        assert defs[0].comments == 'say "hi"'

    def test_crlf_accepted(self):
        text = atlas("ST,1,A,eye,GetX(M1),GetY(M1),FALSE,-").replace("\n", "\r\n")
        assert len(parse_atlas(text)) == 1

    def test_reserved_channel_m(self):
        with pytest.raises(AtlasParseError):
            parse_atlas(atlas("M,1,A,eye,GetX(M1),GetY(M1),FALSE,-"))


@given(st.text(max_size=300))
@settings(max_examples=200)
def test_parse_atlas_never_panics(text):
    try:
        parse_atlas(text)
    except AtlasFileError:
        pass


class TestCompile:
    def test_mesh_only_is_direct(self):
        prog = compile_atlas(parse_atlas(atlas(
            "RHD,1,Yintang,brow,0.5*GetX(M55)+0.5*GetX(M285),0.5*GetY(M55)+0.5*GetY(M285),FALSE,-",
        )))
        assert prog.complexity(ex.PointId.parse("RHD1")) is Complexity.DIRECT

    def test_cun_off_direct_is_one_time(self):
        prog = compile_atlas(parse_atlas(atlas(
            "RHD,3,Pupil,eye,GetX(M263),GetY(M263),TRUE,-",
            "ST,1,Chengqi,eye,GetX(RHD3),GetY(RHD3)+1*U,TRUE,-",
        )))
        assert prog.complexity(ex.PointId.parse("ST1")) is Complexity.ONE_TIME

    def test_chained_proportional_is_multi(self):
        prog = compile_atlas(parse_atlas(atlas(
            "RHD,3,Pupil,eye,GetX(M263),GetY(M263),TRUE,-",
            "ST,1,Chengqi,eye,GetX(RHD3),GetY(RHD3)+1*U,TRUE,-",
            "ST,2,Sibai,eye,GetX(RHD3),GetY(ST1)+0.5*U,TRUE,-",
        )))
        assert prog.complexity(ex.PointId.parse("ST2")) is Complexity.MULTI_TIME

    def test_hairline_is_one_step(self):
        prog = compile_atlas(parse_atlas(atlas(
            "RHD,2,Hairline,forehead,GetX(M_HAIRLINE),GetY(M_HAIRLINE),FALSE,-",
        )))
        assert prog.complexity(ex.PointId.parse("RHD2")) is Complexity.ONE_TIME

    def test_cycle_detected(self):
        text = atlas(
            "AA,1,A,x,GetX(BB1),GetY(BB1),FALSE,-",
            "BB,1,B,x,GetX(AA1),GetY(AA1),FALSE,-",
        )
        with pytest.raises(CycleError) as e:
            compile_atlas(parse_atlas(text))
        assert len(e.value.cycle) == 3  # closed walk: first repeats at the end

    def test_self_reference_is_a_cycle(self):
        with pytest.raises(CycleError):
            compile_atlas(parse_atlas(atlas("AA,1,A,x,GetX(AA1),GetY(AA1),FALSE,-")))

    def test_undefined_reference(self):
        with pytest.raises(UndefinedReference):
            compile_atlas(parse_atlas(atlas("AA,1,A,x,GetX(ZZ9),GetY(ZZ9),FALSE,-")))

    def test_mesh_index_out_of_range(self):
        with pytest.raises(UndefinedReference):
            compile_atlas(parse_atlas(atlas("AA,1,A,x,GetX(M468),GetY(M468),FALSE,-")))

    def test_center_needs_side_qualifier_for_symmetric(self):
        text = atlas(
            "RHD,3,Pupil,eye,GetX(M263),GetY(M263),TRUE,-",
            "AA,1,A,x,GetX(RHD3),GetY(RHD3),FALSE,-",
        )
        with pytest.raises(SideAccessError):
            compile_atlas(parse_atlas(text))

    def test_center_with_qualifier_ok(self):
        text = atlas(
            "RHD,3,Pupil,eye,GetX(M263),GetY(M263),TRUE,-",
            "AA,1,A,x,GetX(RHD3.R),GetY(RHD3.L),FALSE,-",
        )
        compile_atlas(parse_atlas(text))

    def test_qualifier_on_center_point_rejected(self):
        text = atlas(
            "RHD,1,Yintang,brow,GetX(M55),GetY(M55),FALSE,-",
            "AA,1,A,x,GetX(RHD1.L),GetY(RHD1.L),FALSE,-",
        )
        with pytest.raises(SideAccessError):
            compile_atlas(parse_atlas(text))

    def test_length_product_rejected_at_validation(self):
        with pytest.raises(DimensionError):
            compile_atlas(parse_atlas(atlas("AA,1,A,x,U*U,GetY(M1),FALSE,-")))

    def test_topological_order(self, sample_program):
        order = {pid: i for i, pid in enumerate(sample_program.order)}
        for pid, cp in sample_program.points.items():
            for dep in cp.point_refs:
                assert order[dep] < order[pid]

    def test_order_breaks_ties_by_file_order(self):
        text = atlas(
            "AA,2,A2,x,GetX(M2),GetY(M2),FALSE,-",
            "AA,1,A1,x,GetX(M1),GetY(M1),FALSE,-",
            "AA,3,A3,x,GetX(AA1)+GetX(AA2),GetY(AA1),FALSE,-",
        )
        prog = compile_atlas(parse_atlas(text))
        assert [str(p) for p in prog.order] == ["AA2", "AA1", "AA3"]

    def test_deterministic_dump(self, sample_atlas_text):
        a = compile_atlas(parse_atlas(sample_atlas_text)).to_canonical_json()
        b = compile_atlas(parse_atlas(sample_atlas_text)).to_canonical_json()
        assert a == b
        assert a.encode("utf-8") == b.encode("utf-8")


class TestClassifierOracle:
    def test_sample_atlas(self, sample_atlas_text):
        defs = parse_atlas(sample_atlas_text)
        prog = compile_atlas(defs)
        oracle = depth_oracle(defs)
        for pid in prog.points:
            assert prog.complexity(pid) is oracle[pid], str(pid)

    def test_bench_atlas(self):
        defs = parse_atlas(make_bench_atlas(73))
        prog = compile_atlas(defs)
        oracle = depth_oracle(defs)
        for pid in prog.points:
            assert prog.complexity(pid) is oracle[pid], str(pid)

    def test_reference_to_one_time_without_own_cun_is_multi(self):
        # a point that merely reads a proportional point inherits its
        # derivation chain
        defs = parse_atlas(atlas(
            "RHD,3,Pupil,eye,GetX(M263),GetY(M263),TRUE,-",
            "ST,1,Chengqi,eye,GetX(RHD3),GetY(RHD3)+1*U,TRUE,-",
            "AA,1,Echo,x,GetX(ST1.R),GetY(ST1.R),FALSE,-",
        ))
        prog = compile_atlas(defs)
        assert prog.complexity(ex.PointId.parse("AA1")) is Complexity.MULTI_TIME
        assert depth_oracle(defs)[ex.PointId.parse("AA1")] is Complexity.MULTI_TIME

    def test_reference_to_direct_without_cun_is_one_time(self):
        defs = parse_atlas(atlas(
            "RHD,1,Yintang,brow,GetX(M55),GetY(M55),FALSE,-",
            "AA,1,Echo,x,GetX(RHD1),GetY(RHD1),FALSE,-",
        ))
        prog = compile_atlas(defs)
        assert prog.complexity(ex.PointId.parse("AA1")) is Complexity.ONE_TIME
        assert depth_oracle(defs)[ex.PointId.parse("AA1")] is Complexity.ONE_TIME


class TestCensus:
    def test_sample_matches_hand_counts(self, sample_program):
        c = census(sample_program)
        assert c.reference == {"direct": 3, "one_time": 1, "multi_time": 0}
        assert c.acupoint == {"direct": 1, "one_time": 5, "multi_time": 4}
        assert c.total() == 14
        assert c.total() == sample_program.point_count()

    def test_empty_program(self):
        c = census(compile_atlas([]))
        assert c.reference == {"direct": 0, "one_time": 0, "multi_time": 0}
        assert c.acupoint == {"direct": 0, "one_time": 0, "multi_time": 0}

    def test_table_layout(self, sample_program):
        table = format_census_table(census(sample_program))
        lines = table.splitlines()
        assert len(lines) == 3
        assert lines[0].split() == ["Quantity", "Direct", "One-time", "Multi-time"]
        assert lines[1].split()[-3:] == ["3", "1", "0"]
        assert lines[2].split()[-3:] == ["1", "5", "4"]
