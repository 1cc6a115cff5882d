import json
import math
from pathlib import Path

import pytest

from convexslice.errors import SchemaError
from convexslice.instances import (
    generate_instance,
    parse_instance,
    parse_result,
    run_instance,
    serialize_instance,
    serialize_result,
    verify_result,
)
from convexslice.separation import check_well_separated

INSTANCE_DIR = Path(__file__).resolve().parent.parent / "instances"
SHIPPED = sorted(INSTANCE_DIR.glob("*.json"))


def test_parse_shipped_two_squares():
    inst = parse_instance((INSTANCE_DIR / "two_squares.json").read_text())
    assert inst.dimension == 2
    assert inst.mode == "halfspace"
    assert inst.names == ("K1", "K2")
    assert inst.alpha == pytest.approx([0.5, 0.5])
    assert inst.bodies[1].volume == pytest.approx(1.0)


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_serialize_round_trip(path):
    text = path.read_text()
    once = serialize_instance(parse_instance(text))
    twice = serialize_instance(parse_instance(once))
    assert once == twice


def _doc(**overrides):
    doc = {
        "dimension": 2,
        "mode": "halfspace",
        "bodies": [
            {"name": "A", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
            {"name": "B", "vertices": [[3, 0], [4, 0], [4, 1], [3, 1]]},
        ],
        "alpha": [0.5, 0.5],
    }
    doc.update(overrides)
    return json.dumps(doc)


def test_parse_rejections():
    cases = [
        (_doc(alpha=[0.5, 1.5]), "alpha"),
        (_doc(alpha=[0.5]), "alpha"),
        (_doc(dimension=9), "dimension"),
        (_doc(mode="disk"), "mode"),
        (_doc(extra=1), "extra"),
        (_doc(options={"warp": 2}), "options.warp"),
        (_doc(options={"seed": "high"}), "options.seed"),
        ("{not json", "document"),
        (_doc(bodies=[{"name": "A", "vertices": [[0, 0], [1, 0], [1, 1]]}]),
         "bodies"),
    ]
    for text, field in cases:
        with pytest.raises(SchemaError) as err:
            parse_instance(text)
        assert err.value.field == field
    # duplicate names and non-numeric vertices
    bad = _doc(bodies=[
        {"name": "A", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
        {"name": "A", "vertices": [[3, 0], [4, 0], [4, 1], [3, 1]]}])
    with pytest.raises(SchemaError):
        parse_instance(bad)
    with pytest.raises(SchemaError):
        parse_instance(_doc(bodies=[
            {"name": "A", "vertices": [[0, "x"], [1, 0], [1, 1]]},
            {"name": "B", "vertices": [[3, 0], [4, 0], [4, 1]]}]))


def test_parse_tangent_partition():
    inst = parse_instance((INSTANCE_DIR / "tangent_squares.json").read_text())
    assert inst.mode == "tangent"
    assert inst.inside == (0,)
    assert inst.alpha is None
    with pytest.raises(SchemaError):
        parse_instance(_doc(mode="tangent"))  # alpha given in tangent mode
    with pytest.raises(SchemaError):
        parse_instance(_doc(mode="tangent", alpha=None,
                            partition={"inside": ["A", "B"]}).replace(
                                '"alpha": null, ', ""))


def test_generate_separated_boxes():
    inst = generate_instance(2, "separated_boxes", seed=1)
    assert check_well_separated(inst.family).ok
    assert inst.mode == "halfspace"
    assert len(inst.bodies) == 2
    assert ((inst.alpha > 0) & (inst.alpha < 1)).all()
    # deterministic: same seed gives byte-identical text
    again = generate_instance(2, "separated_boxes", seed=1)
    assert serialize_instance(inst) == serialize_instance(again)
    other = generate_instance(2, "separated_boxes", seed=2)
    assert serialize_instance(other) != serialize_instance(inst)


def test_generate_random_triangles_dims():
    for d in (2, 3):
        inst = generate_instance(d, "random_triangles", seed=5)
        assert check_well_separated(inst.family).ok
        assert len(inst.bodies) == d
        for body in inst.bodies:
            assert len(body.vertices) == d + 1
    inst = generate_instance(2, "random_triangles", seed=5, mode="sphere")
    assert len(inst.bodies) == 3 and inst.mode == "sphere"


def test_generate_radial_squares_fixed():
    a = generate_instance(2, "radial_squares", seed=1)
    b = generate_instance(2, "radial_squares", seed=999)
    assert a.mode == "sphere"
    for ba, bb in zip(a.bodies, b.bodies):
        assert ba.vertices == pytest.approx(bb.vertices)  # seed-independent
    assert a.bodies[0].volume == pytest.approx(1.0)
    with pytest.raises(SchemaError):
        generate_instance(3, "radial_squares", seed=1)
    with pytest.raises(SchemaError):
        generate_instance(2, "hexagons", seed=1)


def test_run_and_verify_halfspace():
    inst = parse_instance((INSTANCE_DIR / "two_squares.json").read_text())
    res = run_instance(inst)
    assert res.status == "ok"
    assert res.halfspace.normal == pytest.approx([0.0, 1.0], abs=1e-9)
    assert res.halfspace.offset == pytest.approx(0.5, abs=1e-9)
    assert res.margin == pytest.approx(1.0, abs=1e-7)
    ok, err = verify_result(inst, res)
    assert ok and err <= 1e-9
    # round trip through the result document
    back = parse_result(serialize_result(res))
    assert back.halfspace.normal == pytest.approx(res.halfspace.normal)
    assert back.halfspace.offset == pytest.approx(res.halfspace.offset)
    assert back.per_body_fraction == pytest.approx(res.per_body_fraction)
    assert back.seed == res.seed


def test_run_and_verify_tangent():
    inst = parse_instance((INSTANCE_DIR / "tangent_squares.json").read_text())
    res = run_instance(inst)
    assert res.second_halfspace is not None
    ok, err = verify_result(inst, res)
    assert ok, f"tangent sides violated by {err}"


def test_run_and_verify_sphere():
    inst = parse_instance((INSTANCE_DIR / "radial_squares.json").read_text())
    res = run_instance(inst)
    assert res.sphere is not None
    assert res.sphere.center == pytest.approx([0.0, 0.0], abs=1e-7)
    assert 2.5 < res.sphere.radius < math.sqrt(12.5)
    ok, err = verify_result(inst, res)
    assert ok, f"sphere fractions off by {err}"
    back = parse_result(serialize_result(res))
    assert back.sphere.radius == pytest.approx(res.sphere.radius)


def test_determinism_across_runs():
    inst = parse_instance((INSTANCE_DIR / "two_squares.json").read_text())
    r1 = serialize_result(run_instance(inst))
    r2 = serialize_result(run_instance(inst))
    assert r1 == r2
