import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ivnnt.plots import box_stats, boxplot_svg

NS = "{http://www.w3.org/2000/svg}"


def test_box_stats():
    s = box_stats([1, 2, 3, 4, 5, 100, math.inf, float("nan")])
    assert s["n"] == 6 and s["n_inf"] == 1
    assert s["median"] == pytest.approx(3.5)
    assert s["whisker_hi"] == 5 and list(s["outliers"]) == [100]
    assert box_stats([math.inf])["n"] == 0


def test_svg_layout():
    rng = np.random.default_rng(0)
    groups = [(n, m, rng.normal(4.6, 2 / math.sqrt(n / 500), 100)) for n in (500, 1000) for m in ("iv", "baseline")]
    groups[1] = (500, "baseline", [math.inf] * 30 + list(rng.normal(8, 1, 70)))
    svg = boxplot_svg(groups, 4.65, title="NNT <demo> & co")
    root = ET.fromstring(svg)  # well-formed XML
    boxes = root.findall(f"{NS}g[@class='box']")
    assert [(b.get("data-n"), b.get("data-method")) for b in boxes] == [
        ("500", "iv"), ("500", "baseline"), ("1000", "iv"), ("1000", "baseline")]
    truth = root.findall(f"{NS}line[@class='truth']")
    assert len(truth) == 1 and truth[0].get("stroke-dasharray")
    assert "inf: 30" in svg
    assert "href" not in svg and "<image" not in svg
