import json

import pytest

from locint.cli import main, render_json


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_invariants_json_roundtrip(capsys):
    code, out, err = run(capsys, "invariants", "-p", "3", "--diag", "1,2,3")
    assert code == 0, err
    doc = json.loads(out)
    assert render_json(doc) == out                 # byte-identical re-emit
    inv = doc["invariants"]
    assert inv["exponents"] == ["0", "0", "1"]
    assert inv["admissible"] is True
    assert inv["eps_sign"] == "-1"
    # exact strings everywhere: no bare numbers in the document
    def no_numbers(obj):
        if isinstance(obj, dict):
            return all(no_numbers(v) for v in obj.values())
        if isinstance(obj, list):
            return all(no_numbers(v) for v in obj)
        return not isinstance(obj, (int, float)) or isinstance(obj, bool)
    assert no_numbers(doc)


def test_intersect_values(capsys):
    code, out, _ = run(capsys, "intersect", "-p", "3", "--diag", "1,2,27")
    assert code == 0
    doc = json.loads(out)
    v = doc["values"]
    assert v["closed"] == v["density"] == v["case_table"] == "2"
    assert v["combinatorial"] is None              # no radius given
    assert doc["agreement"] is True


def test_intersect_with_tree_route(capsys):
    code, out, _ = run(capsys, "intersect", "-p", "3", "--diag", "1,2,3",
                       "--radius", "2", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["values"]["combinatorial"] == "1"
    assert doc["provenance"]["ball_radius"] == "2"


def test_intersect_global_multiplier(capsys):
    code, out, _ = run(capsys, "intersect", "-p", "3", "--diag", "1,3,3",
                       "--global-multiplier", "6")
    assert code == 0
    v = json.loads(out)["values"]
    assert (v["closed"], v["scaled"], v["global_multiplier"]) == ("2", "12", "6")


def test_exit_codes(capsys):
    # missing matrix entirely
    code, _, err = run(capsys, "intersect", "-p", "3")
    assert code == 1 and "diag" in err
    # both inputs at once
    code, _, _ = run(capsys, "intersect", "-p", "3", "--diag", "1,2,3",
                     "--matrix", "1,0,0,0,2,0,0,0,3")
    assert code == 1
    # non-prime/even p
    code, _, _ = run(capsys, "intersect", "-p", "2", "--diag", "1,2,3")
    assert code == 1
    # singular input
    code, _, _ = run(capsys, "invariants", "-p", "3", "--matrix",
                     "1,0,0,0,1,1,0,1,1")
    assert code == 1
    # inadmissible tuple
    code, _, err = run(capsys, "intersect", "-p", "3", "--diag", "1,6,3")
    assert code == 2 and "inadmissible" in err


def test_rational_entries_cleared(capsys):
    code, out, _ = run(capsys, "invariants", "-p", "3", "--diag", "1/2,1,3/2")
    assert code == 0
    assert json.loads(out)["invariants"]["exponents"] == ["0", "0", "1"]
    # denominator divisible by p is rejected
    code, _, err = run(capsys, "invariants", "-p", "3", "--diag", "1/3,1,3")
    assert code == 1 and "denominator" in err


def test_nondiagonal_matrix_input(capsys):
    code, out, _ = run(capsys, "intersect", "-p", "3", "--matrix",
                       "0,1,0,1,0,0,0,0,3")
    assert code == 0
    doc = json.loads(out)
    assert doc["invariants"]["exponents"] == ["0", "0", "1"]
    assert doc["values"]["closed"] == "1"


def test_density_report_and_oracle(capsys):
    code, out, _ = run(capsys, "density", "-p", "3", "--diag", "1,2,3",
                       "--r", "0", "--oracle")
    assert code == 0
    v = json.loads(out)["values"]
    assert v["a_at_p^-r"] == "0"                   # the series vanishes at 1
    assert v["oracle_density"] == "0"
    assert v["oracle_rule"] == "zero-count"
    assert v["alpha_prime"] == "-80/81"


def test_density_formats(capsys):
    code, out, _ = run(capsys, "density", "-p", "3", "--diag", "1,2,3",
                       "--format", "text")
    assert code == 0
    assert "alpha_prime: -80/81" in out
    code, out, _ = run(capsys, "density", "-p", "3", "--diag", "1,2,3",
                       "--format", "csv")
    assert code == 0
    header, row = out.splitlines()[:2]
    assert "values.alpha_prime" in header
    assert "-80/81" in row


def test_building_report(capsys):
    code, out, _ = run(capsys, "building", "-p", "3", "--diag", "1,2,3",
                       "--seed", "7")
    assert code == 0
    doc = json.loads(out)
    assert doc["agreement"] is True
    assert doc["values"]["combinatorial"] == doc["values"]["closed"] == "1"
    kinds = {s["fixed_locus"] for s in doc["slots"]}
    assert kinds == {"subtree", "edge-midpoint"}
    assert set(doc["pair_geometry"]) == {"01", "02", "12"}


def test_verify_grid(capsys):
    code, out, _ = run(capsys, "verify", "-p", "3", "--max-a", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["agreement"] is True
    assert doc["failures"] == "0"
    assert int(doc["total"]) == len(doc["tuples"]) > 0
    # csv mode emits one row per tuple plus a header
    code, out, _ = run(capsys, "verify", "-p", "3", "--max-a", "2",
                       "--format", "csv")
    assert code == 0
    assert len(out.splitlines()) == int(doc["total"]) + 1
