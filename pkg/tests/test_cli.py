import json
import math
import subprocess
import sys

import pytest

from affdim.cli import EXIT_BUDGET, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, main
from affdim.document import IFSDocument, bundled_names, load_document
from affdim.errors import ValidationError
from affdim.render import read_pgm

REPORT_FIELDS = {"command", "document", "inputs_digest", "settings", "results", "wall_time", "version"}


def write_doc(tmp_path, maps, name="doc", **extra):
    data = {"name": name, "dim": len(maps[0][1]), "maps": [{"matrix": A, "translation": v} for A, v in maps], **extra}
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data))
    return path


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main([*argv, "--json-out", str(out), "--quiet"])
    report = json.loads(out.read_text()) if code == EXIT_OK else None
    return code, report


def test_bundled_documents_load():
    names = bundled_names()
    assert {"sierpinski", "skew-gasket", "triangular-pair", "reducible-pair", "triangle-subdivision"} <= set(names)
    for name in names:
        doc = load_document(name)
        assert doc.N >= 2 and doc.dim == 2
        assert load_document(f"{name}.json") == doc


def test_document_round_trip():
    for name in bundled_names():
        doc = load_document(name)
        again = IFSDocument.loads(doc.dumps())
        assert again == doc
        assert again.digest() == doc.digest()
        assert IFSDocument.from_dict(json.loads(json.dumps(doc.to_dict()))) == doc


def test_document_probabilities_and_labels():
    doc = IFSDocument(2, (((0.5, 0), (0, 0.5)),) * 2, ((0, 0), (1, 0)), probabilities=(0.25, 0.75), labels=("a", "b"))
    assert doc.measure().p == (0.25, 0.75)
    again = IFSDocument.loads(doc.dumps())
    assert again.labels == ("a", "b") and again.probabilities == (0.25, 0.75)
    assert again.ifs().labels == ["a", "b"]


@pytest.mark.parametrize(
    "data",
    [
        {"dim": 2, "maps": [{"matrix": [[0.5, 0], [0, 0.5]], "translation": [0, 0]}]},
        {"dim": 2, "maps": [{"matrix": [[0.5, 0], [0, 0.5]], "translation": [0, 0]}] * 2, "probabilities": [0.5, 0.6]},
        {"dim": 2, "maps": [{"matrix": [[1, 2], [2, 4]], "translation": [0, 0]}] * 2},
        {"dim": 2, "maps": [{"matrix": [[0.5, 0, 0], [0, 0.5, 0]], "translation": [0, 0]}] * 2},
        {"dim": 2, "maps": [{"matrix": [[0.5, 0], [0, 0.5]]}] * 2},
        {"dim": 0, "maps": []},
        {"maps": []},
        [1, 2],
    ],
)
def test_invalid_documents(data):
    with pytest.raises(ValidationError):
        IFSDocument.from_dict(data)


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        IFSDocument.loads("{not json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["dimaff", str(bad), "--quiet"]) == EXIT_VALIDATION
    assert main(["dimaff", str(tmp_path / "missing.json"), "--quiet"]) == EXIT_VALIDATION


def test_single_map_rejected(tmp_path):
    path = write_doc(tmp_path, [([[0.5, 0], [0, 0.5]], [0, 0])], "single")
    assert main(["dimaff", str(path), "--quiet"]) == EXIT_VALIDATION


def test_bad_flags(tmp_path):
    assert main(["dimaff", "sierpinski", "--depth", "0", "--quiet"]) == EXIT_VALIDATION
    assert main(["dimaff", "sierpinski", "--tol", "-1", "--quiet"]) == EXIT_VALIDATION
    assert main(["audit", "sierpinski", "--measure", "0.5,0.5", "--quiet"]) == EXIT_VALIDATION
    assert main(["audit", "triangular-pair", "--measure", "hutchinson", "--quiet"]) == EXIT_VALIDATION


def test_non_contracting_is_validation_error(tmp_path):
    path = write_doc(tmp_path, [([[1.2, 0], [0, 0.5]], [0, 0]), ([[0.5, 0], [0, 0.5]], [1, 0])], "expand")
    assert main(["dimaff", str(path), "--quiet"]) == EXIT_VALIDATION


def test_budget_exit_code():
    assert main(["dimaff", "sierpinski", "--budget", "100", "--quiet"]) == EXIT_BUDGET


def test_numeric_exit_code(tmp_path):
    # six maps of ratio 0.9 in the plane: dimaff = log 6 / log(1/0.9) > 2d, so
    # the bisection on [0, 2d] never changes sign
    maps = [([[0.9, 0], [0, 0.9]], [float(k), 0.0]) for k in range(6)]
    path = write_doc(tmp_path, maps, "dense")
    assert main(["dimaff", str(path), "--depth", "4", "--quiet"]) == EXIT_NUMERIC


def test_dimaff_report(tmp_path):
    code, rep = run(tmp_path, "dimaff", "sierpinski", "--depth", "8")
    assert code == EXIT_OK
    assert set(rep) == REPORT_FIELDS
    assert rep["command"] == "dimaff" and rep["document"] == "sierpinski"
    assert rep["inputs_digest"] == load_document("sierpinski").digest()
    assert rep["settings"]["depth"] == 8 and rep["settings"]["tol"] == 1e-3
    dv = rep["results"]["dimaff"]
    assert abs(dv["value"] - math.log(3) / math.log(2)) <= 1e-3
    assert dv["depth"] == 8 and dv["tol"] == 1e-3
    assert dv["bracket"][0] <= dv["value"] <= dv["bracket"][1]


def test_check_report(tmp_path):
    code, rep = run(tmp_path, "check", "triangular-pair", "--depth", "8")
    assert code == EXIT_OK
    res = rep["results"]
    assert res["applies"] is True
    assert res["similitude"]["counterexample_word"] == [0]
    code, rep = run(tmp_path, "check", "reducible-pair", "--depth", "8")
    assert rep["results"]["hypotheses"]["irreducible"] is False
    assert rep["results"]["irreducibility"]["witness"] is not None


def test_gap_report(tmp_path):
    code, rep = run(tmp_path, "gap", "sierpinski", "--depth", "8")
    assert code == EXIT_OK
    res = rep["results"]
    assert abs(res["gap"]) < 2e-3
    assert res["gap_detected"] is False
    assert res["check"]["applies"] is False
    for key in ("dimaff", "gamma", "maximizer", "dimaff_lower", "gamma_upper", "depth", "tol", "diagnostics"):
        assert key in res
    code, rep = run(tmp_path, "gap", "reducible-pair", "--depth", "6")
    assert code == EXIT_OK
    assert rep["results"]["check"]["applies"] is False


def test_gap_prints_caveat(tmp_path, capsys):
    assert main(["gap", "reducible-pair", "--depth", "6"]) == EXIT_OK
    assert "caveat" in capsys.readouterr().out


def test_audit_report(tmp_path):
    code, rep = run(tmp_path, "audit", "sierpinski", "--depth", "6", "--measure", "uniform",
                    "--s", str(math.log(3) / math.log(2)))
    assert code == EXIT_OK
    res = rep["results"]
    assert res["gibbs"]["ratio"] <= 1 + 1e-9
    assert res["defect"] is None
    assert res["det_relation"] == "within"
    code, rep = run(tmp_path, "audit", "triangular-pair", "--depth", "8", "--s", "1")
    res = rep["results"]
    assert res["defect"]["defect"] > 1e-6
    assert res["det_relation"] == "below"
    code, rep = run(tmp_path, "audit", "triangular-pair", "--depth", "6", "--measure", "det")
    assert code == EXIT_OK and rep["results"]["dimaff"] is not None


def test_render_commands(tmp_path):
    out = tmp_path / "g.pgm"
    code, rep = run(tmp_path, "render", "sierpinski", "--out", str(out), "--size", "128", "--render-depth", "7")
    assert code == EXIT_OK
    assert read_pgm(out).shape == (128, 128)
    sc = rep["results"]["self_cover"]
    assert sc["hits"] == rep["results"]["hits"]
    assert sc["image_fraction"] == sc["symmetric_difference"] / 128**2
    out = tmp_path / "m.ppm"
    code, rep = run(tmp_path, "render", "skew-gasket", "--mode", "measure", "--out", str(out),
                    "--size", "64", "--samples", "20000", "--measure", "0.2,0.3,0.5")
    assert code == EXIT_OK
    assert out.read_text().startswith("P3")
    assert rep["results"]["meta"]["seed"] == 0


def test_reports_are_reproducible(tmp_path):
    a = run(tmp_path, "gap", "triangular-pair", "--depth", "6", "--seed", "5")[1]
    b = run(tmp_path, "gap", "triangular-pair", "--depth", "6", "--seed", "5")[1]
    assert a["results"]["gamma"] == b["results"]["gamma"]
    assert a["results"]["maximizer"] == b["results"]["maximizer"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "affdim.cli", "dimaff", "sierpinski", "--depth", "6"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "dimaff = 1.58" in proc.stdout
