from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from easinnova.cli import main
from helpers import PIZZALOVE, copy_fixture, edit, mutate


def run(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_validate_clean_fixture():
    code, text = run("-C", str(PIZZALOVE), "validate")
    assert code == 0
    assert text.splitlines() == [
        "WARNING OPAAL-XCAT cim/asis/lexicon: term 'Address' declared under several categories: Object, Attribute",
        "WARNING R1 cim/asis/lexicon: link 'Order-Qty' endpoint 'Qty' is not a declared term (acknowledged)",
        "WARNING R1 cim/asis/lexicon: link 'Pizza-Pices' endpoint 'Pices' is not a declared term (acknowledged)",
        "WARNING OPAAL-XCAT cim/tobe/lexicon: term 'Address' declared under several categories: Object, Attribute",
    ]


def test_validate_fryburgers(tmp_path):
    root = copy_fixture(tmp_path)
    mutate(root, "R3")
    code, text = run("-C", str(root), "validate")
    assert code == 1
    assert "ERROR R3 pim/tobe/process: task 'FryBurgers' not found in ToBe Process terms" in text.splitlines()


def test_validate_cell_filter_and_severity():
    code, text = run("-C", str(PIZZALOVE), "validate", "--cell", "CIM-TOBE", "--min-severity", "info")
    assert code == 0
    assert text and all(" cim/tobe/" in line for line in text.splitlines())


def test_validate_suggest(tmp_path):
    root = copy_fixture(tmp_path)
    mutate(root, "R3")
    code, text = run("-C", str(root), "validate", "--suggest")
    assert "SUGGEST ToBe Process: FryBurgers" in text.splitlines()
    code, text = run("-C", str(root), "validate", "--suggest", "--format", "json")
    data = json.loads(text)
    assert data["suggestions"]["ToBe"] == {"Process": ["FryBurgers"]}
    assert {d["code"] for d in data["diagnostics"]} >= {"R3"}


def test_env_var_selects_project(monkeypatch):
    monkeypatch.setenv("EASINNOVA_PROJECT", str(PIZZALOVE))
    code, text = run("status")
    assert code == 0 and text.endswith("next step: Done\n")


def test_status_json():
    code, text = run("-C", str(PIZZALOVE), "status", "--format", "json")
    data = json.loads(text)
    assert data["next_step"] == "Done"
    assert set(data["cells"].values()) == {"Ready"}


def test_init_then_status(tmp_path):
    code, text = run("init", "PizzaLove", str(tmp_path / "p"))
    assert code == 0 and "next step: cim/asis" in text
    assert run("init", "PizzaLove", str(tmp_path / "p"))[0] == 3
    code, text = run("-C", str(tmp_path / "p"), "status")
    assert "next step: cim/asis" in text


@pytest.mark.parametrize("argv", [["frobnicate"], ["validate", "--bogus"], ["simulate", "--mode", "fast"],
                                  ["validate", "--cell", "XIM-ASIS"], []])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_project_exits_3(tmp_path):
    assert run("-C", str(tmp_path), "status")[0] == 3


def test_parse_failure_exits_3(tmp_path):
    root = copy_fixture(tmp_path)
    (root / "psm/asis/inventory.json").write_text("{", encoding="utf-8")
    assert run("-C", str(root), "validate")[0] == 3


def test_lexicon_diff():
    code, text = run("-C", str(PIZZALOVE), "lexicon", "diff", "--format", "json")
    actors = json.loads(text)["Actor"]
    assert actors == {"added": ["CRM", "DeliveryService", "DoughMaker", "PizzaCook", "SCM"],
                      "removed": ["DeliveryBoy", "PizzaShop"], "kept": ["Customer"]}
    code, text = run("-C", str(PIZZALOVE), "lexicon", "diff")
    assert "  removed: DeliveryBoy, PizzaShop" in text.splitlines()


def test_derive(tmp_path):
    code, _ = run("-C", str(PIZZALOVE), "derive", "--stage", "asis")
    assert code == 1
    code, text = run("-C", str(PIZZALOVE), "derive", "--stage", "asis", "--allow-unresolved")
    assert code == 0 and "  DeliveryBoy -> Delivering" in text.splitlines()
    assert "  Home [Address]" in text.splitlines()
    root = copy_fixture(tmp_path)
    (root / "pim/tobe/usecases.json").unlink()
    (root / "pim/tobe/classes.json").unlink()
    assert run("-C", str(root), "derive", "--write")[0] == 0
    assert json.loads((root / "pim/tobe/usecases.json").read_text()) == json.loads(
        (PIZZALOVE / "pim/tobe/usecases.json").read_text())


def test_crud_matrix():
    code, text = run("-C", str(PIZZALOVE), "crud-matrix")
    assert code == 0 and text.splitlines()[0].startswith("Process \\ Object")
    code, text = run("-C", str(PIZZALOVE), "crud-matrix", "--layer", "psm", "--format", "json")
    assert json.loads(text)["matrix"]["cells"]["SubmitOrder"]["Order"] == "C"


def test_export(tmp_path):
    root = copy_fixture(tmp_path)
    code, text = run("-C", str(root), "export")
    target = root / "export" / "tobe.bpmn"
    assert code == 0 and target.exists()
    first = target.read_bytes()
    run("-C", str(root), "export")
    assert target.read_bytes() == first
    assert run("-C", str(root), "export", "--stage", "asis")[0] == 1


def test_export_untyped_fails(tmp_path, capsys):
    root = copy_fixture(tmp_path)
    mutate(root, "PSM-UNTYPED")
    assert run("-C", str(root), "export")[0] == 1
    assert "PSM-UNTYPED" in capsys.readouterr().err


def test_simulate():
    code, text = run("-C", str(PIZZALOVE), "simulate", "--format", "json")
    report = json.loads(text)
    assert code == 0 and report["outcome"] == "ProperCompletion" and report["unreached_nodes"] == []
    code, text = run("-C", str(PIZZALOVE), "simulate", "--max-states", "10")
    assert code == 1 and "outcome: BoundExceeded" in text


def test_trace_is_seed_stable():
    args = ("-C", str(PIZZALOVE), "simulate", "--mode", "trace", "--seed", "11", "--format", "json")
    assert run(*args) == run(*args)


def test_simulate_deadlock(tmp_path):
    root = copy_fixture(tmp_path)

    def break_join(data):
        pool = next(p for p in data["pools"] if p["name"] == "PizzaLove")
        next(n for n in pool["nodes"] if n["id"] == "StockMerge")["kind"] = "AndGateway"

    edit(root, "psm/tobe/process.json", break_join)
    code, text = run("-C", str(root), "simulate")
    assert code == 1 and "outcome: Deadlock" in text and "witness:" in text


def test_json_output_is_byte_identical_across_processes():
    cmd = [sys.executable, "-m", "easinnova", "-C", str(PIZZALOVE), "validate", "--format", "json",
           "--min-severity", "info"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and json.loads(first)
