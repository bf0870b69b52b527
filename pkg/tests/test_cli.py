"""End-to-end command-line behavior: exit codes, schemas, idempotence."""

import json
import re

import jsonschema
import numpy as np
import pytest

import dtoda.cli as cli
from dtoda import __version__
from dtoda.cli import _schema, main
from dtoda.identities import IdentityReport


@pytest.fixture()
def circle_json(tmp_path):
    p = tmp_path / "circle.json"
    p.write_text(json.dumps({"r": 1.0, "coeffs": [[0.0, 0.0]]}))
    return str(p)


@pytest.fixture()
def pert_json(tmp_path):
    p = tmp_path / "pert.json"
    p.write_text(json.dumps(
        {"r": 1.0, "coeffs": [[0.0, 0.0], [0.12, 0.04], [0.02, 0.0]]}))
    return str(p)


@pytest.fixture()
def sigma1_json(tmp_path):
    p = tmp_path / "sigma1.json"
    p.write_text(json.dumps({"family": "homogeneous", "c": 1.0, "alpha": 1.0,
                             "r0_sq": 0.0, "r1_sq": 100.0}))
    return str(p)


def _run(capsys, argv):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def _json_out(capsys, argv):
    code, out, err = _run(capsys, argv)
    assert code == 0, err
    return json.loads(out)


# -- basic contracts -------------------------------------------------------------

def test_moments_circle_is_trivial(capsys, circle_json, sigma1_json):
    doc = _json_out(capsys, ["moments", "--map", circle_json,
                             "--density", sigma1_json, "-N", "8"])
    assert abs(doc["moments"]["t0"] - 1.0) < 1e-12
    assert all(abs(re) < 1e-12 and abs(im) < 1e-12
               for re, im in doc["moments"]["t"])
    assert doc["version"] == __version__
    assert doc["config"]["orders"] == 8
    assert doc["config"]["map"] == circle_json
    jsonschema.validate(doc, _schema("out.moments.schema.json"))


def test_tau_both_routes_agree(capsys, pert_json, sigma1_json):
    doc = _json_out(capsys, ["tau", "--map", pert_json,
                             "--density", sigma1_json, "--method", "both"])
    assert len(doc["results"]) == 2
    methods = {r["method"] for r in doc["results"]}
    assert methods == {"DoubleIntegral", "MomentIdentity"}
    assert doc["spread"] is not None and doc["spread"] < 1e-5
    jsonschema.validate(doc, _schema("out.tau.schema.json"))


def test_invert_roundtrip_writes_map(capsys, tmp_path, pert_json, sigma1_json):
    doc = _json_out(capsys, ["moments", "--map", pert_json,
                             "--density", sigma1_json, "-N", "3"])
    targets = tmp_path / "targets.json"
    targets.write_text(json.dumps(doc["moments"]))
    od = tmp_path / "inv"
    doc = _json_out(capsys, ["invert", "--targets", str(targets),
                             "--density", sigma1_json,
                             "--out-dir", str(od)])
    assert doc["residual_norm"] <= 1e-12
    assert abs(doc["map"]["r"] - 1.0) < 1e-8
    assert abs(doc["map"]["coeffs"][1][0] - 0.12) < 1e-8
    jsonschema.validate(doc, _schema("out.invert.schema.json"))
    side = json.loads((od / "map.json").read_text())
    jsonschema.validate(side, _schema("map.schema.json"))
    assert side == doc["map"]
    assert (od / "invert.json").exists()


def test_grow_zero_steps_echoes_curve(capsys, pert_json, sigma1_json):
    doc = _json_out(capsys, ["grow", "--map", pert_json,
                             "--density", sigma1_json,
                             "--method", "front", "--steps", "0"])
    assert len(doc["states"]) == 1
    assert doc["states"][0]["map"]["r"] == 1.0
    # echoed curve equals the sampled input boundary exactly
    from dtoda.conformal import boundary_curve, map_from_json_dict
    m = map_from_json_dict(json.load(open(pert_json)))
    want = boundary_curve(m, 64).samples
    got = np.array([complex(a, b) for a, b in doc["final_curve"]])
    assert np.max(np.abs(got - want)) == 0.0
    jsonschema.validate(doc, _schema("out.grow.schema.json"))


def test_grow_moment_csv_and_svg(capsys, tmp_path, pert_json, sigma1_json):
    od = tmp_path / "g"
    doc = _json_out(capsys, ["grow", "--map", pert_json,
                             "--density", sigma1_json,
                             "--method", "moment", "--steps", "4",
                             "--dt", "0.02", "--svg-every", "2",
                             "--out-dir", str(od)])
    assert [s["step"] for s in doc["states"]] == [0, 1, 2, 3, 4]
    csv_text = (od / "states.csv").read_text()
    lines = csv_text.strip().split("\n")
    assert len(lines) == 6
    assert lines[0].startswith("step,t0,r,u0_re")
    # 17 significant digits on float cells
    t0cell = lines[2].split(",")[1]
    assert re.match(r"^\d+\.\d{13,16}$", t0cell) or len(t0cell) >= 17
    frames = sorted(od.glob("frame_*.svg"))
    assert [f.name for f in frames] == ["frame_0000.svg", "frame_0002.svg",
                                        "frame_0004.svg"]
    svg = frames[0].read_text()
    assert "<svg" in svg and "date" not in svg and "time" not in svg


def test_cone_and_cylinder_artifacts(capsys, tmp_path, pert_json):
    od = tmp_path / "c"
    doc = _json_out(capsys, ["cone", "--map", pert_json, "--alpha", "0.5",
                             "--out-dir", str(od)])
    assert doc["kind"] == "cone"
    jsonschema.validate(doc, _schema("out.curve.schema.json"))
    assert (od / "curve.csv").exists() and (od / "curve.svg").exists()
    doc = _json_out(capsys, ["cylinder", "--map", pert_json, "-R", "1.0",
                             "--r0", "0.2"])
    assert doc["kind"] == "cylinder"
    ys = [im for re_, im in doc["samples"]]
    assert abs(max(ys) - 2 * np.pi) < 1e-9


def test_verify_single_suite_passes(capsys, sigma1_json, pert_json):
    code, out, err = _run(capsys, ["verify", "--density", sigma1_json,
                                   "--map", pert_json, "--suite", "dkdv"])
    assert code == 0, err
    doc = json.loads(out)
    assert doc["all_passed"] is True
    assert doc["reports"][0]["name"] == "dkdv"
    jsonschema.validate(doc, _schema("out.verify.schema.json"))


def test_verify_random_domain_gradient(capsys, sigma1_json):
    code, out, err = _run(capsys, ["verify", "--density", sigma1_json,
                                   "--random-domain", "--t0", "1.0",
                                   "-J", "2", "--seed", "7",
                                   "--suite", "gradient"])
    assert code == 0, err
    doc = json.loads(out)
    assert doc["all_passed"] and doc["reports"][0]["name"] == "gradient"


def test_verify_failure_exits_2(capsys, monkeypatch, sigma1_json, circle_json):
    bad = IdentityReport("gradient", 1.0, 1e-3, False, {})
    monkeypatch.setattr(cli, "run_suite",
                        lambda *a, **k: [bad])
    code, out, err = _run(capsys, ["verify", "--density", sigma1_json,
                                   "--map", circle_json,
                                   "--suite", "gradient"])
    assert code == 2
    doc = json.loads(out)
    assert doc["all_passed"] is False


# -- error paths -------------------------------------------------------------------

def _expect_error(capsys, argv, typ=None, fragment=None):
    code, out, err = _run(capsys, argv)
    assert code == 1
    assert out == ""
    doc = json.loads(err)
    assert "error" in doc and "config" in doc and doc["version"] == __version__
    if typ:
        assert doc["error"]["type"] == typ
    if fragment:
        assert fragment in doc["error"]["message"]
    return doc


def test_missing_file_is_structured_error(capsys, sigma1_json):
    _expect_error(capsys, ["moments", "--map", "nope.json",
                           "--density", sigma1_json, "-N", "2"],
                  typ="CliError", fragment="nope.json")


def test_bad_schema_is_structured_error(capsys, tmp_path, sigma1_json):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"r": -1.0, "coeffs": [[0.0, 0.0]]}))
    _expect_error(capsys, ["moments", "--map", str(bad),
                           "--density", sigma1_json, "-N", "2"],
                  typ="CliError")


def test_usage_error_exits_1_not_2(capsys):
    _expect_error(capsys, ["grow", "--nonsense"], typ="CliError")
    _expect_error(capsys, ["frobnicate"], typ="CliError")


def test_zero_orders_rejected(capsys, circle_json, sigma1_json):
    _expect_error(capsys, ["moments", "--map", circle_json,
                           "--density", sigma1_json, "-N", "0"],
                  typ="CliError")


def test_missing_dt_rejected(capsys, circle_json, sigma1_json):
    _expect_error(capsys, ["grow", "--map", circle_json,
                           "--density", sigma1_json,
                           "--method", "moment", "--steps", "3"],
                  typ="CliError", fragment="--dt")


def test_domain_error_is_structured(capsys, tmp_path, circle_json):
    dens = tmp_path / "tight.json"
    dens.write_text(json.dumps({"family": "cylinder", "R": 2.0,
                                "r0_sq": 0.04, "r1_sq": 0.5}))
    doc = _expect_error(capsys, ["moments", "--map", circle_json,
                                 "--density", str(dens), "-N", "2"],
                        typ="OutOfAnnulus")
    assert doc["config"]["orders"] == 2


def test_version_flag(capsys):
    code, out, err = _run(capsys, ["--version"])
    assert code == 0


# -- idempotence ---------------------------------------------------------------------

def test_rerun_is_byte_identical(capsys, tmp_path, pert_json, sigma1_json):
    od = tmp_path / "o"
    argv = ["grow", "--map", pert_json, "--density", sigma1_json,
            "--method", "front", "--steps", "3", "--dt", "1e-3",
            "--svg-every", "1", "--out-dir", str(od)]
    code, out1, _ = _run(capsys, argv)
    assert code == 0
    first = {p.name: p.read_bytes() for p in od.iterdir()}
    code, out2, _ = _run(capsys, argv)
    assert code == 0
    assert out1 == out2
    for p in od.iterdir():
        assert p.read_bytes() == first[p.name], p.name


def test_random_domain_is_seed_stable(capsys, sigma1_json):
    argv = ["verify", "--density", sigma1_json, "--random-domain",
            "--seed", "3", "-J", "2", "--suite", "dkdv"]
    _, out1, _ = _run(capsys, argv)
    _, out2, _ = _run(capsys, argv)
    assert out1 == out2
