"""Hand-coded oracle for the sample atlas.

Evaluates every row of data/sample_atlas.csv as straight-line arithmetic in
aligned space, without the expression AST or the evaluator. Mirrors the
data file literally, row by row; if the sample atlas changes, this must be
updated by hand to match.
"""


def evaluate_sample_atlas(aligned, hairline_pt, uc):
    """Returns {(point id string, side letter): (x, y) aligned}."""
    v = aligned.vertices
    m = aligned.midline_x

    def mirror(p):
        return (2.0 * m - p[0], p[1])

    pts = {}

    rhd1 = (0.5 * v[55, 0] + 0.5 * v[285, 0], 0.5 * v[55, 1] + 0.5 * v[285, 1])
    pts[("RHD1", "C")] = rhd1

    pts[("RHD2", "C")] = (float(hairline_pt[0]), float(hairline_pt[1]))

    rhd3 = (
        0.25 * (v[263, 0] + v[362, 0] + v[386, 0] + v[374, 0]),
        0.25 * (v[263, 1] + v[362, 1] + v[386, 1] + v[374, 1]),
    )
    pts[("RHD3", "R")] = rhd3
    pts[("RHD3", "L")] = mirror(rhd3)

    pts[("GV25", "C")] = (v[4, 0], v[4, 1])

    pts[("EXHN3", "C")] = rhd1

    gb14 = (rhd3[0], rhd1[1] - 1.0 * uc)
    pts[("GB14", "R")] = gb14
    pts[("GB14", "L")] = mirror(gb14)

    st1 = (rhd3[0], rhd3[1] + 1.0 * uc)
    pts[("ST1", "R")] = st1
    pts[("ST1", "L")] = mirror(st1)

    st2 = (rhd3[0], st1[1] + 0.5 * uc)
    pts[("ST2", "R")] = st2
    pts[("ST2", "L")] = mirror(st2)

    st3 = (rhd3[0], st2[1] + 1.0 * uc)
    pts[("ST3", "R")] = st3
    pts[("ST3", "L")] = mirror(st3)

    return pts
