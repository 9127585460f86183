import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carpet_modulus import io
from carpet_modulus.carpets import Boundary, Scene, carpet_to_scene, standard_carpet
from carpet_modulus.cli import main
from carpet_modulus.config import Config, thread_cap
from carpet_modulus.errors import DomainError
from carpet_modulus.geometry import MetricKind
from carpet_modulus.uniformizer import Layout, Square


# -- serialization -------------------------------------------------------------

@st.composite
def scenes(draw):
    slots = draw(st.lists(st.integers(0, 15), min_size=1, max_size=6, unique=True))
    holes = []
    for lab, s in enumerate(slots):
        x, y = 2.0 * (s % 4), 2.0 * (s // 4)
        size = draw(st.floats(0.1, 0.9))
        kind = draw(st.sampled_from(["square", "disk", "polygon"]))
        if kind == "square":
            holes.append(Boundary(lab, "square", (x, y, size)))
        elif kind == "disk":
            holes.append(Boundary(lab, "disk", (x + 0.5, y + 0.5, size / 2)))
        else:
            holes.append(Boundary(lab, "polygon", (x, y, x + size, y, x, y + size)))
    return Scene(None, tuple(holes), draw(st.sampled_from([MetricKind.EUCLIDEAN, MetricKind.CHORDAL])))


@given(scenes())
def test_scene_json_round_trip(scene):
    text = io.dumps(io.scene_to_json(scene))
    back = io.scene_from_json(json.loads(text))
    assert io.dumps(io.scene_to_json(back)) == text
    assert list(back.labels) == list(scene.labels)


def test_carpet_scene_round_trip(tmp_path):
    s = carpet_to_scene(standard_carpet(2))
    io.write_scene(s, tmp_path / "c.json")
    assert io.scene_to_json(io.read_scene(tmp_path / "c.json")) == json.loads(io.dumps(io.scene_to_json(s)))


@pytest.mark.parametrize("doc", [
    [], {"version": "2"}, {"version": "1", "metric": "hyperbolic"},
    {"version": "1", "holes": [{"vertices": [[0, 0], [1, 0], [0, 1]]}]},
    {"version": "1", "holes": [{"label": 0, "vertices": [0, 1, 2]}]},
    {"version": "1", "holes": [{"label": 0}]},
    {"version": "1", "holes": "none"},
])
def test_bad_scene_documents(doc):
    with pytest.raises(io.SceneFileError):
        io.scene_from_json(doc)


def test_dumps_rounding_and_specials():
    out = json.loads(io.dumps({"b": math.pi, "a": [math.inf, -math.inf, math.nan], "c": np.float32(0.5),
                               "d": np.arange(2), "e": 1 + 2j}))
    assert list(out) == ["b", "a", "c", "d", "e"]
    assert out["b"] == 3.14159265359
    assert out["a"] == ["inf", "-inf", "nan"]
    assert out["d"] == [0, 1] and out["e"] == [1.0, 2.0]


def test_layout_json_round_trip():
    L = Layout(1.25, {2: Square(0.5, 1.0, 0.2), 3: Square(0.7, 6.0, 0.1)}, 3.5, 5.0, 1e-7)
    back = io.layout_from_json(json.loads(io.dumps(io.layout_to_json(L))))
    assert back.squares == L.squares and back.h_A == L.h_A


def test_svg_splits_squares_on_the_seam():
    svg = io.layout_svg(Layout(1.0, {2: Square(0.5, 0.05, 0.3)}))
    assert svg.count("<title>2</title>") == 2
    assert 'stroke="red"' in svg


def test_csv_format():
    assert io.to_csv([(1, 0.1 + 0.2)], ["k", "v"]) == "k,v\n1,0.3\n"


# -- configuration -------------------------------------------------------------

def test_config_round_trip_and_validation(monkeypatch):
    c = Config(seed=3, h=1 / 32)
    assert Config.from_json(c.to_json()) == c
    assert c.replace(eps=None, seed=4).seed == 4
    with pytest.raises(DomainError):
        Config.from_json({"seed": 1, "colour": "red"})
    with pytest.raises(DomainError):
        Config(h=0)
    with pytest.raises(DomainError):
        Config(convention="half-open")
    monkeypatch.setenv("CARPET_MODULUS_THREADS", "2")
    assert thread_cap() == 2
    monkeypatch.setenv("CARPET_MODULUS_THREADS", "zero")
    with pytest.raises(DomainError):
        thread_cap()


# -- command line ------------------------------------------------------------------

C_SHAPE = [[-1, -1], [1, -1], [1, -0.005], [0.8, -0.005], [0.8, -0.8], [-0.8, -0.8], [-0.8, 0.8],
           [0.8, 0.8], [0.8, 0.005], [1, 0.005], [1, 1], [-1, 1]]


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, argv in {"carpet": ["gen", "carpet", "--depth", "1"],
                       "annulus": ["gen", "annulus", "--r", "1", "--R", "2.718281828459045"],
                       "cyl": ["gen", "cylinder", "--h", "1", "--squares", "0.4@0.5:0,0.6@0.5:3.14"]}.items():
        p = tmp_path / f"{name}.json"
        assert main(argv + ["-o", str(p)]) == 0
        paths[name] = p
    trap = {"version": "1", "holes": [{"label": 0, "kind": "square", "params": [-0.2, -0.2, 0.4]},
                                      {"label": 1, "kind": "square", "params": [2, 0, 0.5]},
                                      {"label": 2, "vertices": C_SHAPE}]}
    paths["trap"] = tmp_path / "trap.json"
    paths["trap"].write_text(json.dumps(trap))
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text("{not json")
    return paths


def test_gen_outputs(files):
    carpet = io.read_scene(files["carpet"])
    assert set(carpet.labels) == {0, 1} and carpet.outer is not None
    cyl = io.read_scene(files["cyl"])
    assert set(cyl.labels) == {0, 1, 2, 3}


def test_gen_is_byte_identical(files, tmp_path):
    again = tmp_path / "again.json"
    main(["gen", "cylinder", "--h", "1", "--squares", "0.4@0.5:0,0.6@0.5:3.14", "-o", str(again)])
    assert again.read_bytes() == files["cyl"].read_bytes()


def test_modulus_command(files, tmp_path):
    out = tmp_path / "m.json"
    csv = tmp_path / "rho.csv"
    assert main(["modulus", str(files["annulus"]), "--h", "0.03125", "-o", str(out), "--csv", str(csv)]) == 0
    d = json.loads(out.read_text())
    assert d["version"] == "1" and abs(d["value"] - 2 * math.pi) < 1e-5
    assert csv.read_text().count("\n") > 1


def test_modulus_exit_codes(files, capsys):
    assert main(["modulus", str(files["bad"])]) == 1
    assert main(["modulus", str(files["annulus"]), "--E", "1,2"]) == 1
    assert main(["modulus", str(files["carpet"]), "--mode", "carpet", "--h", "0.0625"]) == 2
    assert main(["modulus", str(files["trap"]), "--h", "0.0625"]) == 3
    assert main(["frobnicate"]) == 1
    assert main(["gen", "cylinder", "--h", "1", "--squares", "0.4@0.5"]) == 1
    capsys.readouterr()


def test_uniformize_command(files, tmp_path):
    out, svg = tmp_path / "L.json", tmp_path / "L.svg"
    assert main(["uniformize", str(files["cyl"]), "--h", "0.03125", "-o", str(out), "--svg", str(svg)]) == 0
    d = json.loads(out.read_text())
    assert abs(d["h_A"] - 1.0) < 0.05 and len(d["squares"]) == 2
    assert svg.read_text().startswith("<svg")


def test_diagnose_command(files, tmp_path):
    out, csv = tmp_path / "d.json", tmp_path / "d.csv"
    assert main(["diagnose", str(files["carpet"]), "--samples", "64", "--trials", "4",
                 "-o", str(out), "--csv", str(csv)]) == 0
    assert csv.read_text().splitlines()[0] == "label,k,lambda,mu,s"
    assert "version" in json.loads(out.read_text())


def test_validate_command(capsys):
    assert main(["validate", "fast", "--only", "2", "--json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["passed"] and [c["number"] for c in d["criteria"]] == [2]
    assert main(["validate", "fast", "--only", "99"]) == 1
    assert main(["validate", "fast", "--only", "2"]) == 0
    assert capsys.readouterr().out.startswith("[PASS]  2")
