import xml.etree.ElementTree as ET

import pytest

from ftft.svg import SvgError, heatmap, line_chart

SVG_NS = "{http://www.w3.org/2000/svg}"


def parse(svg: str) -> ET.Element:
    return ET.fromstring(svg)


def count(root: ET.Element, tag: str, cls: str | None = None) -> int:
    elems = root.iter(SVG_NS + tag)
    if cls is None:
        return sum(1 for _ in elems)
    return sum(1 for e in elems if e.get("class") == cls)


def test_line_chart_structure():
    svg = line_chart({"a": [0.1, 0.5, 0.9], "b": [0.2, 0.3, 0.4]}, title="t")
    root = parse(svg)
    assert count(root, "polyline", "series") == 2
    # each polyline carries one x,y pair per value
    lines = [e for e in root.iter(SVG_NS + "polyline")]
    assert all(len(e.get("points").split()) == 3 for e in lines)


def test_line_chart_unequal_lengths_share_x_scale():
    svg = line_chart({"full": [0.0, 0.5, 1.0, 1.0], "stopped": [0.0, 0.5]})
    lines = {len(e.get("points").split()) for e in parse(svg).iter(SVG_NS + "polyline")}
    assert lines == {4, 2}


def test_line_chart_single_point_series_renders_marker():
    svg = line_chart({"dot": [0.5]})
    root = parse(svg)
    assert count(root, "circle", "series") == 1
    assert count(root, "polyline", "series") == 0


def test_line_chart_deterministic():
    series = {"a": [0.123456, 0.654321], "b": [0.9, 0.1]}
    assert line_chart(series) == line_chart(series)


def test_line_chart_clamps_out_of_range():
    svg = line_chart({"a": [-1.0, 2.0]})
    root = parse(svg)
    ys = []
    for e in root.iter(SVG_NS + "polyline"):
        if e.get("class") == "series":
            ys = [float(p.split(",")[1]) for p in e.get("points").split()]
    top, bottom = 30.0, 400.0 - 72.0
    assert all(top - 0.01 <= y <= bottom + 0.01 for y in ys)


def test_line_chart_rejects_bad_input():
    with pytest.raises(SvgError):
        line_chart({})
    with pytest.raises(SvgError):
        line_chart({"a": []})
    with pytest.raises(SvgError):
        line_chart({"a": [0.1, float("nan")]})
    with pytest.raises(SvgError):
        line_chart({"a": [0.1]}, y_min=1.0, y_max=0.0)


def test_heatmap_structure():
    labels = ["a", "b", "c"]
    values = [[1.0, 0.5, 0.0], [0.5, 1.0, 0.25], [0.0, 0.25, 1.0]]
    root = parse(heatmap(labels, values))
    assert count(root, "rect", "cell") == 9
    texts = [e.text for e in root.iter(SVG_NS + "text")]
    # one annotation per cell, at two decimals
    assert sum(1 for t in texts if t == "0.25") == 2
    assert sum(1 for t in texts if t == "1.00") == 3


def test_heatmap_color_endpoints():
    svg = heatmap(["a", "b"], [[0.0, 1.0], [1.0, 0.0]])
    assert "#f7fbff" in svg  # 0 -> light
    assert "#08306b" in svg  # 1 -> dark


def test_heatmap_rejects_non_square():
    with pytest.raises(SvgError):
        heatmap(["a", "b"], [[1.0, 0.0]])
    with pytest.raises(SvgError):
        heatmap([], [])
    with pytest.raises(SvgError):
        heatmap(["a"], [[float("inf")]])


def test_heatmap_deterministic():
    labels = ("x", "y")
    values = ((1.0, 0.3), (0.3, 1.0))
    assert heatmap(labels, values) == heatmap(labels, values)
