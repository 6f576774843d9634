import copy
import csv
import json
import subprocess
import sys
from importlib import resources

import pytest

from cotrans import __version__
from cotrans.cli import main, replay, run
from cotrans.errors import ReplayError, SpecError
from cotrans.report import LAW_DESCRIPTIONS

SPEC_DIR = resources.files("cotrans") / "specs"
EXPECTED_EXIT = {"verify_corrupted": 1, "generator_noncommuting": 1, "evolve_divergent": 3}
SPECS = sorted(p.name[:-5] for p in SPEC_DIR.iterdir() if p.name.endswith(".json"))


def spec_path(name):
    return str(SPEC_DIR / f"{name}.json")


def load(name):
    return json.loads((SPEC_DIR / f"{name}.json").read_text())


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


@pytest.mark.parametrize("name", SPECS)
def test_spec_exit_codes(name, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["--spec", spec_path(name), "--out", str(out)])
    assert code == EXPECTED_EXIT.get(name, 0), capsys.readouterr().err
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["version"] == __version__
    assert doc["pass"] is (code == 0)


def test_report_shape():
    doc, code, _ = run(load("verify_difference_seq"))
    assert code == 0
    names = [e["law"] for e in doc["entries"]]
    assert {"cocycle", "unit", "involution", "invertible"} <= set(names)
    for e in doc["entries"]:
        assert set(e) >= {"law", "max_residual", "argmax", "argmax_triple", "pass", "tol", "samples"}
    assert doc["meta"]["radius"] == 6


def test_complete_output_values():
    doc, code, _ = run(load("complete_counterexample"))
    assert code == 0
    out = doc["output"]
    assert out["rank"] == 1 and out["M"] == 1.0
    for g, h, m in out["Z_full"]:
        assert m == [[1.0, 0.0], [0.0, 2.0**h]]
    for g, t in out["T"]:
        assert t == [[0.0, 1.0], [1.0, 0.0]]


def test_determinism_modulo_wall_time():
    spec = load("verify_free_group")
    a, _, _ = run(spec)
    b, _, _ = run(copy.deepcopy(spec))
    a.pop("wall_time")
    b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_replay_round_trip(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["--spec", spec_path("verify_counterexample"), "--out", str(out)]) == 0
    assert main(["--spec", spec_path("verify_counterexample"), "--replay", str(out)]) == 0
    assert "replay: ok" in capsys.readouterr().out


def test_replay_of_failing_and_error_reports():
    for name in ("verify_corrupted", "evolve_divergent", "generator_noncommuting"):
        spec = load(name)
        doc, _, _ = run(spec)
        assert replay(doc, spec)[0], name


def test_tampered_residual_detected(tmp_path, capsys):
    spec = load("verify_difference_seq")
    doc, _, _ = run(spec)
    doc["entries"][0]["max_residual"] = float(doc["entries"][0]["max_residual"]) * 1.5 + 1e-9
    ok, problems = replay(doc, spec)
    assert not ok and problems
    path = write(tmp_path, "bad.json", doc)
    assert main(["--spec", spec_path("verify_difference_seq"), "--replay", path]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_replay_ignores_run_seed_for_seeded_objects():
    # object seeds live in the spec, so the run seed only moves sampled windows
    spec = load("verify_difference_seq")
    doc, _, _ = run(spec)
    assert replay(doc, spec, seed=99)[0]


def test_replay_version_mismatch(tmp_path):
    spec = load("verify_morphism")
    doc, _, _ = run(spec)
    doc["version"] = "0.0.0"
    with pytest.raises(ReplayError):
        replay(doc, spec)
    path = write(tmp_path, "old.json", doc)
    assert main(["--spec", spec_path("verify_morphism"), "--replay", path]) == 2


def test_list_laws(capsys):
    assert main(["--list-laws"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert [ln.split("\t")[0] for ln in lines] == sorted(LAW_DESCRIPTIONS)


def test_tolerance_override_flips_result():
    spec = load("verify_corrupted")
    doc, code, _ = run(spec, tol_overrides={"cocycle": 1.0, "involution": 1.0})
    assert code == 0 and doc["pass"]
    doc, code, _ = run(load("verify_difference_seq"), tol_overrides={"cocycle": 0.0})
    assert code == 1


def test_bad_tolerance_arguments(capsys):
    assert main(["--spec", spec_path("verify_morphism"), "--tol", "cocycle"]) == 2
    assert main(["--spec", spec_path("verify_morphism"), "--tol", "cocycle=-1"]) == 2
    assert "spec error" in capsys.readouterr().err


def test_csv_dump(tmp_path):
    out = tmp_path / "psi.csv"
    assert main(["--spec", spec_path("evolve_diagonal"), "--out", str(tmp_path / "r.json"), "--csv", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0][0] == "t" and len(rows) > 2
    assert main(["--spec", spec_path("verify_morphism"), "--out", str(tmp_path / "r2.json"), "--csv", str(out)]) == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda s: s.pop("cotranslation"),
        lambda s: s.__setitem__("command", "integrate"),
        lambda s: s["cotranslation"].__setitem__("family", "chaotic"),
        lambda s: s.__setitem__("radius", 0),
        lambda s: s.__setitem__("group", {"kind": "lie"}),
    ],
)
def test_schema_errors_exit_2(mutate, tmp_path, capsys):
    spec = load("verify_difference_seq")
    mutate(spec)
    assert main(["--spec", write(tmp_path, "s.json", spec)]) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("spec error") and "\n" not in err


def test_unreadable_spec(tmp_path, capsys):
    assert main(["--spec", str(tmp_path / "missing.json")]) == 2
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["--spec", str(p)]) == 2
    assert main([]) == 2


def test_max_dim_env(monkeypatch, tmp_path):
    monkeypatch.setenv("COTRANS_MAX_DIM", "2")
    with pytest.raises(SpecError):
        run(load("verify_difference_seq"))
    assert main(["--spec", spec_path("verify_difference_seq")]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "cotrans", "--spec", spec_path("verify_morphism")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["pass"] is True
    res = subprocess.run([sys.executable, "-m", "cotrans", "--version"], capture_output=True, text=True)
    assert __version__ in res.stdout
