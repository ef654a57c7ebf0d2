"""Generators, serialization, rendering and the command-line front end."""
import json
import xml.dom.minidom

import pytest

from skyscraper import HeightDistribution, SurgeredPresentation, expand_at
from skyscraper.cli import main
from skyscraper.exact import parse_exact
from skyscraper.generators import GENERATORS, random_skyscraper, skyscraper
from skyscraper.render import render_ascii, render_svg, surgery_diagrams, transformation_diagram
from skyscraper.serialize import parse_transformation, transformation_text


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("kind", sorted(GENERATORS))
def test_generator_round_trip(kind):
    T = GENERATORS[kind]()
    text = transformation_text(T)
    assert transformation_text(parse_transformation(text)) == text


def test_random_skyscraper_is_seed_deterministic():
    assert transformation_text(random_skyscraper(7)) == transformation_text(random_skyscraper(7))
    assert transformation_text(random_skyscraper(7)) != transformation_text(random_skyscraper(8))


def test_gen_and_classify_exit_codes(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "gen", "shift", "d=1", "--out", a)[0] == 0
    assert run(capsys, "gen", "shift", "d=3/2", "--out", b)[0] == 0
    code, out, _ = run(capsys, "run", "classify", a, b)
    assert code == 2 and out.strip() == "impossible: d1=1, d2=3/2"
    code, out, _ = run(capsys, "run", "classify", a, a)
    assert code == 0 and out.strip() == "conjugacy possible: d=1"


def test_errors_are_machine_readable(capsys, tmp_path):
    a = tmp_path / "geo.json"
    run(capsys, "gen", "geometric_skyscraper", "n0=1", "g=2", "w0=1/2", "r=1/2", "--out", a)
    code, _, err = run(capsys, "run", "absorb", a, "--epsilon", "1/2")
    assert code == 1 and json.loads(err)["error"] == "ConjugacyError"
    code, _, err = run(capsys, "run", "rokhlin", tmp_path / "missing.json", "-N", "2", "--epsilon", "1")
    assert code == 1 and "error" in json.loads(err)


def test_conjugate_then_verify(capsys, tmp_path):
    a, b, m = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "m.json"
    run(capsys, "gen", "geometric_skyscraper", "--out", a)
    run(capsys, "gen", "random_skyscraper", "seed=3", "--out", b)
    code, _, _ = run(capsys, "run", "conjugate", a, b, "--epsilon", "1/4", "--out", m)
    assert code == 0
    cert = json.loads(m.read_text())["data"]["result"]["certificate"]
    assert parse_exact(cert["bound"]) < parse_exact("1/4")
    code, out, _ = run(capsys, "run", "verify", m, "--samples", "300")
    report = json.loads(out)["data"]
    assert code == 0 and report["passed"] and report["certificate_reproduced"]


def test_surgery_diagrams_hatch_the_added_mass():
    c = skyscraper(HeightDistribution({1: 1, 3: 2})).conservative
    step, P = expand_at(SurgeredPresentation(c), 1, 2, lambda k: 10)
    pre, post = surgery_diagrams(c.heights, P.distribution, [step])
    assert pre.hatched_mass == post.hatched_mass == step.added_mass
    # the hatched strips themselves carry that base measure
    assert sum((col.hatched_width for col in post.columns), parse_exact("0")) == step.added_mass
    text = render_ascii([pre, post])
    assert "/" in text and "hatched base measure 1" in text


def test_svg_is_well_formed_and_deterministic():
    d = transformation_diagram(random_skyscraper(2))
    s = render_svg(d)
    xml.dom.minidom.parseString(s)
    assert render_svg(transformation_diagram(random_skyscraper(2))) == s


def test_empty_diagram_placeholder():
    from skyscraper.generators import shift

    d = transformation_diagram(shift(1))
    assert "empty diagram" in render_ascii(d)
    xml.dom.minidom.parseString(render_svg(d))


def test_render_command(capsys, tmp_path):
    a, s = tmp_path / "a.json", tmp_path / "s.json"
    run(capsys, "gen", "hajian_kakutani_like", "--out", a)
    assert run(capsys, "run", "surgery", a, "--force-through", "3", "--out", s)[0] == 0
    code, out, _ = run(capsys, "render", s, "--format", "svg")
    assert code == 0
    xml.dom.minidom.parseString(out)
    log = json.loads(s.read_text())["data"]
    assert [st["n"] for st in log["steps"]] == [1, 2, 3]


def test_rokhlin_diagram_hatches_the_complement():
    from skyscraper import rokhlin_set
    from skyscraper.render import rokhlin_diagram

    rs = rokhlin_set(skyscraper(HeightDistribution({1: 1, 3: 2, 4: 1})), 2, 10)
    d = rokhlin_diagram(2, rs.part.heights, rs.complement_measure())
    hatched = sum((c.hatched_width * (c.hatched_levels - c.hatched_from) for c in d.columns), parse_exact("0"))
    assert hatched == d.hatched_mass == rs.complement_measure()
