from __future__ import annotations

import json
import subprocess
import sys

from nested_tense.cli import EXIT_ERROR, EXIT_NOT_PROVABLE, EXIT_PROVABLE, main
from nested_tense.countermodel import check_frame_conditions, model_from_dict
from nested_tense.proof import check_proof, proof_from_dict

BOX_OR_IMP = "box (p -> q) | (r -> s)"
SYMMETRY_EXAMPLE = "(bdia p -> dia p) & (p -> box dia p)"


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_box_or_imp_gives_model(capsys):
    code, data = run_json(capsys, "--logic", "", BOX_OR_IMP)
    assert code == EXIT_NOT_PROVABLE
    assert data["provable"] is False and data["verified"] is True
    assert len(data["model"]["worlds"]) == 6
    assert len(data["model"]["R"]) == 2
    assert check_frame_conditions(model_from_dict(data["model"]), "")


def test_symmetry_example_gives_proof(capsys):
    code, data = run_json(capsys, "--logic", "B", SYMMETRY_EXAMPLE)
    assert code == EXIT_PROVABLE
    assert data["provable"] is True and data["logic"] == "B"
    assert check_proof(proof_from_dict(data["proof"]), "B")


def test_false_gives_one_world(capsys):
    code, data = run_json(capsys, "false")
    assert code == EXIT_NOT_PROVABLE
    assert len(data["model"]["worlds"]) == 1


def test_errors_exit_2(capsys):
    assert main(["--logic", "TT", "p"]) == EXIT_ERROR
    assert "error" in capsys.readouterr().err
    assert main(["p &"]) == EXIT_ERROR
    assert "parse error" in capsys.readouterr().err
    assert main(["--sequent", "p |- (f)[q"]) == EXIT_ERROR
    assert main(["--budget", "3", "--sequent", "~box p, ~bbox q |-"]) == EXIT_ERROR
    assert "budget" in capsys.readouterr().err


def test_sequent_input(capsys):
    code, data = run_json(capsys, "--sequent", "p |- (f)[|- p]")
    assert code == EXIT_NOT_PROVABLE
    code, data = run_json(capsys, "--sequent", "box p |- (f)[|- p]")
    assert code == EXIT_PROVABLE and data["proof"]["nodes"][0]["rule"] == "boxL"


def test_human_output_and_trace(capsys):
    assert main(["--trace", "box p -> p", "--logic", "T"]) == EXIT_PROVABLE
    captured = capsys.readouterr()
    assert "is provable in IK_tT" in captured.out
    assert "proof (checked):" in captured.out
    assert captured.err.splitlines()[0].startswith("0 db - |- box p -> p")
    assert main(["box p -> p"]) == EXIT_NOT_PROVABLE
    assert "counter-model (checked):" in capsys.readouterr().out


def test_dot_output(capsys):
    assert main(["--format", "dot", BOX_OR_IMP]) == EXIT_NOT_PROVABLE
    assert capsys.readouterr().out.startswith("digraph model")
    assert main(["--format", "dot", "p -> p"]) == EXIT_PROVABLE
    assert capsys.readouterr().out.startswith("digraph proof")


def test_oracle_cross_check(capsys):
    code, data = run_json(capsys, "--oracle-bound", "2", "p | ~p")
    assert code == EXIT_NOT_PROVABLE and data["oracle"] == {"bound": 2, "outcome": "invalid"}
    code, data = run_json(capsys, "--oracle-bound", "2", "--logic", "T", "box p -> p")
    assert code == EXIT_PROVABLE and data["oracle"]["outcome"] == "no_countermodel"
    assert main(["--oracle-bound", "9", "p"]) == EXIT_ERROR


def test_workers_flag(capsys):
    code, a = run_json(capsys, "--workers", "2", BOX_OR_IMP)
    _, b = run_json(capsys, BOX_OR_IMP)
    assert code == EXIT_NOT_PROVABLE and a["model"] == b["model"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nested_tense", "p -> p"], capture_output=True, text=True)
    assert proc.returncode == EXIT_PROVABLE
    assert "is provable in IK_t" in proc.stdout
