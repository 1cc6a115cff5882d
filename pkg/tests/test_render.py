import pytest

from convexslice.errors import UnsupportedDimension
from convexslice.instances import generate_instance, parse_instance, run_instance
from convexslice.render import render_svg

from pathlib import Path

INSTANCE_DIR = Path(__file__).resolve().parent.parent / "instances"


def _load(name):
    return parse_instance((INSTANCE_DIR / name).read_text())


def test_halfspace_svg_elements():
    inst = _load("two_squares.json")
    res = run_instance(inst)
    svg = render_svg(inst, res)
    assert svg.startswith("<svg")
    assert svg.count("<polygon") == 2
    assert svg.count("<line") == 1
    assert svg.count("<circle") == 0
    assert "K1: 0.500000" in svg and "K2: 0.500000" in svg


def test_sphere_svg_elements():
    inst = _load("radial_squares.json")
    res = run_instance(inst)
    svg = render_svg(inst, res)
    assert svg.count("<polygon") == 3
    assert svg.count("<circle") == 1
    assert svg.count("<line") == 0


def test_tangent_svg_elements():
    inst = _load("tangent_squares.json")
    res = run_instance(inst)
    svg = render_svg(inst, res)
    assert svg.count("<polygon") == 2
    assert svg.count("<line") == 2


def test_instance_only_render():
    inst = _load("two_squares.json")
    svg = render_svg(inst)
    assert svg.count("<polygon") == 2
    assert svg.count("<line") == 0
    assert "K1" in svg


def test_render_is_deterministic():
    inst = _load("two_squares.json")
    res = run_instance(inst)
    assert render_svg(inst, res) == render_svg(inst, res)


def test_render_rejects_non_planar():
    inst = generate_instance(3, "random_triangles", seed=1)
    with pytest.raises(UnsupportedDimension):
        render_svg(inst)
