import json

import pytest

from engelcr.cli import main


def _write(tmp_path, doc, name="m.json"):
    f = tmp_path / name
    f.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(f)


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


CUBIC = {"format": 1, "kind": "cubic", "points": [[0.1, 0.2, 0.3, 0.4], [-0.5, 0.1, 0, 0.2]]}
B8 = {"format": 1, "kind": "normal_form", "coefficients": {"B8": 0.1}}


def test_flatness_exit_codes(tmp_path, capsys):
    code, out, _ = _run(capsys, ["flatness", _write(tmp_path, CUBIC)])
    assert code == 0 and json.loads(out)["flat"] is True
    code, out, _ = _run(capsys, ["flatness", _write(tmp_path, B8, "b8.json")])
    assert code == 1 and json.loads(out)["flat"] is False


def test_umbilic(tmp_path, capsys):
    umb = {"format": 1, "kind": "normal_form", "coefficients": {"A1": 0.5, "B8": 1 / 3}}
    code, _, _ = _run(capsys, ["umbilic", _write(tmp_path, umb)])
    assert code == 0


def test_invariants_values(tmp_path, capsys):
    doc = {"format": 1, "kind": "normal_form", "coefficients": {"B3": 0.05}}
    code, out, _ = _run(capsys, ["invariants", _write(tmp_path, doc)])
    assert code == 0
    inv = json.loads(out)["points"][0]["values"][0]["invariants"]
    assert abs(inv["Ry_y2"]["value"] + 0.15) < 1e-12 and inv["Ry_y2"]["weight"] == 2


def test_degenerate_graph_is_an_error(tmp_path, capsys):
    doc = {"format": 1, "kind": "graph", "F1": [], "F2": []}
    code, out, err = _run(capsys, ["flatness", _write(tmp_path, doc)])
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "EngelDegenerate"


def test_bad_json_reports_position(tmp_path, capsys):
    code, _, err = _run(capsys, ["flatness", _write(tmp_path, '{"format": 1,\n  "kind": }')])
    e = json.loads(err)
    assert code == 2 and e["error"] == "ManifoldFileError"
    assert e["line"] == 2 and e["column"] == 11


@pytest.mark.parametrize("doc,path", [
    ({"format": 2, "kind": "cubic"}, "$.format"),
    ({"format": 1, "kind": "torus"}, "$.kind"),
    ({"format": 1, "kind": "normal_form", "coefficients": {"B9": 1}}, "$.coefficients.B9"),
    ({"format": 1, "kind": "cubic", "points": [[0, 0, 0]]}, "$.points[0]"),
    ({"format": 1, "kind": "graph", "F1": [[[1, 1, 1], 1.0]], "F2": []}, "$.F1[0][0]"),
])
def test_semantic_errors_carry_key_path(tmp_path, capsys, doc, path):
    code, _, err = _run(capsys, ["flatness", _write(tmp_path, doc)])
    e = json.loads(err)
    assert code == 2 and e["path"] == path


def test_missing_file(capsys):
    code, _, err = _run(capsys, ["flatness", "/nonexistent/m.json"])
    assert code == 2 and json.loads(err)["error"] == "ManifoldFileError"


def test_cohomology_command(capsys):
    code, out, _ = _run(capsys, ["cohomology"])
    rep = json.loads(out)
    assert code == 0 and rep["dim_H2"] == 4 and rep["dim_Z2"] == 17


def test_check_passes_and_order_guard(tmp_path, capsys):
    doc = {"format": 1, "kind": "normal_form",
           "coefficients": {"A1": 0.1, "B1": 0.03, "B3": 0.05}, "points": [[0.1, 0, 0, 0]]}
    f = _write(tmp_path, doc)
    code, out, _ = _run(capsys, ["check", f])
    assert code == 0 and json.loads(out)["pass"] is True
    code, _, err = _run(capsys, ["check", f, "--order", "3"])
    assert code == 2 and json.loads(err)["error"] == "InsufficientOrder"


def test_ode_kind_and_point_override(tmp_path, capsys):
    doc = {"format": 1, "kind": "ode", "B": []}
    code, out, _ = _run(capsys, ["flatness", _write(tmp_path, doc), "--point", "0.1,0.2,0.3,0.4"])
    assert code == 0


def test_output_is_deterministic(tmp_path, capsys):
    f = _write(tmp_path, B8)
    _, a, _ = _run(capsys, ["invariants", f, "--table"])
    _, b, _ = _run(capsys, ["invariants", f, "--table"])
    assert a == b
