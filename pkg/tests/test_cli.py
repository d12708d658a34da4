"""Command-line front end: exit codes, output formats, determinism."""

import io
import json
import os

import pytest

from fbsig.cli import main

CONFIG = {
    "systems": {
        "sq": {"f": "u1^2",
               "domain": {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]}},
        "sq2": {"f": "2*u1^2",
                "domain": {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]}},
        "exp34": {"f": "exp(u1)",
                  "domain": {"x": [-1, 1], "u": [-1, 1], "u1": [3, 4]}},
        "cubic": {"f": "u1^3/3 + x*u1 + u^2 + 2",
                  "domain": {"x": [0.2, 1.0], "u": [0.2, 0.8],
                             "u1": [1.8, 2.6]}},
        "lin": {"f": "u1",
                "domain": {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]}},
    },
    "maps": {
        "double": {"X": "2*x", "U": "u"},
        "bad": {"X": "x^2", "U": "u"},
    },
    "grid": [5, 5, 5],
    "seed": 0,
}


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(CONFIG))
    return str(path)


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def test_invariants_regular_row(config_path):
    code, text = run(["invariants", "--config", config_path,
                      "--system", "sq", "--point", "0,0,1"])
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("x\tu\tu1\tregular\tJ\tK")
    cells = lines[1].split("\t")
    assert cells[3] == "yes"
    assert cells[4] == "0.5"        # J
    assert cells[5] == "0"          # K
    assert cells[6] == "0.5"        # J_br


def test_invariants_nonregular_row(config_path):
    code, text = run(["invariants", "--config", config_path,
                      "--system", "sq", "--point", "0,0,0"])
    assert code == 0
    assert "no(f" in text


def test_invariants_missing_system(config_path):
    code, _ = run(["invariants", "--config", config_path,
                   "--system", "nope", "--point", "0,0,1"])
    assert code == 3


def test_invariants_bad_point(config_path):
    code, _ = run(["invariants", "--config", config_path,
                   "--system", "sq", "--point", "0,0"])
    assert code == 3


def test_missing_config_file(tmp_path):
    code, _ = run(["invariants", "--config", str(tmp_path / "nope.json"),
                   "--system", "sq", "--point", "0,0,1"])
    assert code == 3


def test_signature_writes_csvs(config_path, tmp_path):
    out_csv = str(tmp_path / "sq.csv")
    code, text = run(["signature", "--config", config_path,
                      "--system", "sq", "--out", out_csv])
    assert code == 0
    assert "intrinsic_dim: 0" in text
    rows = open(out_csv).read().splitlines()
    assert rows[0].startswith("x,u,u1,j,")
    assert len(rows) == 126
    assert os.path.exists(str(tmp_path / "sq_skipped.csv"))


def test_signature_empty_cloud(config_path):
    code, text = run(["signature", "--config", config_path, "--system", "lin"])
    assert code == 4
    assert "no regular grid point" in text


def test_equiv_exit_codes(config_path):
    code, text = run(["equiv", "--config", config_path, "cubic", "cubic"])
    assert code == 0
    assert json.loads(text)["status"] == "EQUIVALENT"

    code, text = run(["equiv", "--config", config_path, "sq", "exp34"])
    assert code == 1
    assert json.loads(text)["status"] == "NOT_EQUIVALENT"

    code, text = run(["equiv", "--config", config_path, "sq", "sq2"])
    assert code == 2
    assert json.loads(text)["status"] == "INCONCLUSIVE"


def test_transform_invariance_report(config_path, tmp_path):
    out_csv = str(tmp_path / "t.csv")
    code, text = run(["transform", "--config", config_path, "--system", "sq",
                      "--map", "double", "--out", out_csv])
    assert code == 0
    err = float(text.splitlines()[-1].split(": ")[-1])
    assert err < 1e-9
    rows = open(out_csv).read().splitlines()
    assert rows[0] == ("x,u,u1,xt,ut,u1t,g,g_u1,g_u,g_x,g_u1u1,g_uu1,g_uu,"
                       "g_xu1,g_xu,g_xx,J_F,J_G")
    assert len(rows) == 126


def test_transform_noninvertible_map(config_path):
    code, text = run(["transform", "--config", config_path, "--system", "sq",
                      "--map", "bad"])
    assert code == 4
    assert "VIOLATION" in text


def test_orbit_dim_table(config_path):
    code, text = run(["orbit-dim", "--config", config_path, "--k", "1,2,3"])
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "k\trank\texpected\tsv_gap\tstatus"
    ranks = [line.split("\t")[1] for line in lines[1:4]]
    assert ranks == ["7", "12", "18"]
    assert all(line.split("\t")[4] == "PASS" for line in lines[1:4])
    assert "competing dimension expression" in text


def test_orbit_dim_cap(config_path):
    code, _ = run(["orbit-dim", "--config", config_path, "--k", "9"])
    assert code == 3


def test_full_suite_byte_identical(config_path, tmp_path):
    def one_pass():
        # same output paths on both passes so stdout is comparable verbatim
        blobs = []
        for argv, outfile in [
            (["invariants", "--config", config_path, "--system", "sq",
              "--point", "0,0,1", "--point", "0.5,0.5,1.5"], None),
            (["signature", "--config", config_path, "--system", "cubic",
              "--out", str(tmp_path / "c.csv")], str(tmp_path / "c.csv")),
            (["equiv", "--config", config_path, "sq", "exp34"], None),
            (["transform", "--config", config_path, "--system", "sq",
              "--map", "double", "--out", str(tmp_path / "t.csv")],
             str(tmp_path / "t.csv")),
            (["orbit-dim", "--config", config_path, "--k", "1,2,3,4"], None),
        ]:
            code, text = run(argv)
            blobs.append(("exit=%d" % code) + text)
            if outfile:
                blobs.append(open(outfile, "rb").read().decode())
                skipped = outfile.replace(".csv", "_skipped.csv")
                if os.path.exists(skipped):
                    blobs.append(open(skipped, "rb").read().decode())
        return "\x00".join(blobs)

    assert one_pass() == one_pass()
