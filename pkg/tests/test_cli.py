import json
from fractions import Fraction

import pytest
import yaml

from owfbench.cli import ConfigError, main, parse_config
from owfbench.reports import dumps, jsonable

BASE = {
    "candidate": "identity",
    "inverter": ["random_guess", "copy"],
    "n_min": 3,
    "n_max": 7,
    "seed": 11,
    "fuel": 40,
}


def write_config(tmp_path, **changes):
    cfg = {**BASE, **changes}
    cfg = {k: v for k, v in cfg.items() if v is not None}
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def run(tmp_path, verb, *extra, out="out", **changes):
    path = write_config(tmp_path, **changes)
    return main([verb, "--config", path, "--out", str(tmp_path / out), *extra])


@pytest.mark.parametrize("verb", ["density", "delta", "check", "amplify", "ratio"])
def test_verbs_write_reports(tmp_path, verb):
    # amplified tapes are far too long to enumerate
    extra = ("--sampled",) if verb == "amplify" else ()
    assert run(tmp_path, verb, *extra, inputs=16, trials=20) == 0
    doc = json.loads((tmp_path / "out" / f"{verb}.json").read_text())
    assert doc["verb"] == verb and doc["seed"] == 11
    assert doc["caps"] == {"sphere_cap": 24, "tape_cap": 20}
    assert (tmp_path / "out" / f"{verb}.csv").read_text().count("\n") > 1


def test_check_report_contents(tmp_path):
    assert run(tmp_path, "check") == 0
    doc = json.loads((tmp_path / "out" / "check.json").read_text())
    by_name = {r["inverter"]: r for r in doc["reports"]}
    assert by_name["copy"]["verdicts"]["strong_ppt"] == "violated"
    row = by_name["random_guess"]["rows"][0]
    assert row["densities"]["noticeable"]["value_num"] == 0
    assert row["plan"] == {"n": 3, "c": 1, "k": 27, "epsilon": 2 ** -2.5}


def test_density_reference_set(tmp_path):
    assert run(tmp_path, "density", set="contains_11", inverter=None, n_min=4, n_max=4) == 0
    doc = json.loads((tmp_path / "out" / "density.json").read_text())
    point = doc["profiles"][0]["points"][0]
    assert (point["value_num"], point["value_den"]) == (1, 2)


def test_amplify_records_plan(tmp_path):
    assert run(tmp_path, "amplify", "--sampled", inverter="random_guess", n_min=2, n_max=3, inputs=8, trials=10) == 0
    doc = json.loads((tmp_path / "out" / "amplify.json").read_text())
    plans = doc["reports"][0]["amplification"]
    assert [(p["n"], p["k"], p["segment_length"], p["tape_length"]) for p in plans] == [(2, 8, 2, 16), (3, 27, 3, 81)]


def test_partial_inverters_are_clipped_before_amplifying(tmp_path):
    assert run(tmp_path, "amplify", "--sampled", inverter="staggered", n_min=2, n_max=3, inputs=8, trials=10) == 0
    doc = json.loads((tmp_path / "out" / "amplify.json").read_text())
    assert doc["reports"][0]["clipped"] is True


def test_same_seed_same_bytes(tmp_path):
    assert run(tmp_path, "check", "--sampled", out="a", inputs=16, trials=20) == 0
    assert run(tmp_path, "check", "--sampled", out="b", inputs=16, trials=20, workers=4) == 0
    a = (tmp_path / "a" / "check.json").read_bytes()
    assert a == (tmp_path / "b" / "check.json").read_bytes()
    assert run(tmp_path, "check", "--sampled", "--seed", "12", out="c", inputs=16, trials=20) == 0
    assert a != (tmp_path / "c" / "check.json").read_bytes()


def test_unknown_inverter_is_a_config_error_without_output(tmp_path, capsys):
    assert run(tmp_path, "check", inverter=["copy", "nope"]) == 2
    assert not (tmp_path / "out").exists()
    assert "nope" in capsys.readouterr().err


@pytest.mark.parametrize(
    "changes",
    [
        {"bogus": 1},
        {"seed": None},
        {"mode": "fuzzy"},
        {"candidate": "sha256"},
        {"inverter": "genease_fast"},
        {"fuel": None},
        {"c": 0},
        {"n_min": 9, "n_max": 3},
        {"set": "primes"},
    ],
)
def test_config_errors(tmp_path, changes):
    assert run(tmp_path, "check", **changes) == 2


def test_missing_config_file(tmp_path):
    assert main(["check", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_cap_violation(tmp_path):
    assert run(tmp_path, "amplify", inverter="random_guess", n_min=3, n_max=3) == 3
    assert run(tmp_path, "delta", n_min=6, n_max=6, sphere_cap=5) == 3
    assert run(tmp_path, "delta", inverter="random_guess", n_min=6, n_max=6, tape_cap=4) == 3


def test_io_error(tmp_path):
    (tmp_path / "blocker").write_text("")
    assert run(tmp_path, "check", out="blocker/sub") == 4


def test_compare(tmp_path, capsys):
    assert run(tmp_path, "check", out="a", inverter="copy") == 0
    assert run(tmp_path, "check", out="b", inverter="random_guess", n_min=5, n_max=9) == 0
    capsys.readouterr()
    code = main(["compare", str(tmp_path / "a" / "check.json"), str(tmp_path / "b" / "check.json"),
                 "--out", str(tmp_path / "cmp")])
    assert code == 0
    result = json.loads((tmp_path / "cmp" / "comparison.json").read_text())
    assert result["radii"] == [5, 6, 7]
    assert all(r["delta_1"] == -1.0 for r in result["rows"])
    assert "copy c=1" in capsys.readouterr().out


def test_compare_disjoint(tmp_path):
    assert run(tmp_path, "check", out="a", n_min=3, n_max=4) == 0
    assert run(tmp_path, "check", out="b", n_min=5, n_max=6) == 0
    assert main(["compare", str(tmp_path / "a" / "check.json"), str(tmp_path / "b" / "check.json")]) == 2


def test_compare_missing_report(tmp_path):
    assert main(["compare", str(tmp_path / "x.json"), str(tmp_path / "y.json")]) == 4


def test_parse_config_fuel_schedule():
    cfg = parse_config({**{k: v for k, v in BASE.items() if k != "fuel"}, "fuel_degree": 2, "fuel_scale": 3})
    assert cfg.fuel_at(4) == 48
    with pytest.raises(ConfigError):
        parse_config({**BASE, "fuel_degree": 2})


def test_jsonable():
    assert jsonable({"a": Fraction(1, 3), "b": float("inf"), "c": (1, 2)}) == {
        "a": {"num": 1, "den": 3},
        "b": "inf",
        "c": [1, 2],
    }
    assert dumps({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'
