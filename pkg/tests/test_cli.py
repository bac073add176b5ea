import cmath
import json
import math

import numpy as np
import pytest

from cstet import cs3d, csline2d
from cstet.cli import main
from cstet.dilog import EtaPair, ell

M003 = str(cs3d.fixture_path("m003"))
M004 = str(cs3d.fixture_path("m004"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_invariant_human(capsys):
    code, out, _ = run(capsys, "invariant", "--input", M003)
    assert code == 0
    assert out.startswith("invariant[0] = ")
    target = cmath.exp(-2j * math.pi / 5)
    assert f"{target.real:.6f}"[:6] in out


def test_invariant_json(capsys):
    code, out, _ = run(capsys, "invariant", "--input", M003, "--json", "--breakdown")
    assert code == 0
    data = json.loads(out)
    z = complex(data["value"]["re"], data["value"]["im"])
    assert abs(z - cmath.exp(-2j * math.pi / 5)) < 1e-9
    assert len(data["tets"]) == 2


def test_json_output_is_deterministic(capsys):
    _, a, _ = run(capsys, "invariant", "--input", M003, "--json", "--breakdown")
    _, b, _ = run(capsys, "invariant", "--input", M003, "--json", "--breakdown")
    assert a == b


def test_missing_file_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "invariant", "--input", str(tmp_path / "nope.json"))
    assert code == 2 and err.startswith("error:")


def test_malformed_file_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"tetrahedra": [')
    code, _, err = run(capsys, "check", "--input", str(bad))
    assert code == 2 and "error" in err


def test_bad_arguments_exit_2(capsys):
    assert run(capsys, "invariant")[0] == 2
    assert run(capsys, "dilog", "--eta", "++", "--u1", "x", "--u2", "0")[0] == 2
    assert run(capsys, "invariant", "--input", M003, "--tol", "-1")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_tables_verify(capsys):
    code, out, _ = run(capsys, "tables", "--verify", "--samples", "5")
    assert code == 0
    data = json.loads(out)
    assert data["ok"] and data["k_table_checksum"]


def test_check(capsys):
    code, out, _ = run(capsys, "check", "--input", M003, "--json")
    assert code == 0 and json.loads(out)["ok"]


def test_dilog(capsys):
    u = math.log(2)
    code, out, _ = run(capsys, "dilog", "--eta", "++", "--u1", str(u), "--u2", str(-u), "--json")
    assert code == 0
    data = json.loads(out)
    assert set(data) == {"eta", "ell", "ell_reduced", "ell_factor"}
    val = ell(EtaPair.coerce("++"), u, -u)
    assert abs(complex(data["ell"]["re"], data["ell"]["im"]) - val.value) < 1e-14


def test_dilog_rejects_bad_input(capsys):
    code, _, err = run(capsys, "dilog", "--eta", "++", "--u1", "0", "--u2", "0")
    assert code == 2 and "off the curve" in err
    assert run(capsys, "dilog", "--eta", "1,1", "--u1", "0", "--u2", "0")[0] == 2


def test_line_pentagon(capsys):
    code, out, _ = run(capsys, "line", "--trials", "5")
    assert code == 0 and out.startswith("pentagon: 5 trials") and out.rstrip().endswith("ok")


def test_line_script(capsys, tmp_path):
    rng = np.random.default_rng(0)
    secs = {str(v): [[c.real, c.imag] for c in rng.normal(size=2) + 1j * rng.normal(size=2)] for v in range(4)}
    data = {
        "triangles": [[0, 1, 2], [0, 2, 3]],
        "sections": secs,
        "marked": [{"triangle": [0, 1, 2], "edge": [0, 2]}, {"triangle": [0, 2, 3], "edge": [0, 2]}],
        "moves": [{"op": "flip", "edge": [0, 2], "orientation": [1, 3]}],
    }
    path = tmp_path / "script.json"
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, "line", "--script", str(path), "--json")
    assert code == 0
    got = json.loads(out)["factor"]
    assert abs(complex(got["re"], got["im"]) - csline2d.replay_script(data)["factor"]) < 1e-15
    data["moves"] = [{"op": "spin"}]
    path.write_text(json.dumps(data))
    assert run(capsys, "line", "--script", str(path))[0] == 2


def test_solve_m004_reports_no_solutions(capsys):
    code, out, _ = run(capsys, "solve", "--input", M004, "--starts", "300")
    assert code == 0
    assert out.startswith("0 verified solution(s)")
    assert "twisted" in out


@pytest.mark.parametrize("argv", [["--help"], ["invariant", "--help"]])
def test_help_exits_0(capsys, argv):
    assert run(capsys, *argv)[0] == 0
