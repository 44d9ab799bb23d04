import csv
import json

import pytest
from click.testing import CliRunner

from exmeas.cli import main
from helpers import COUNTEREXAMPLE_INI, FINITE_INI, POISSON_INI, ZERO_INI


@pytest.fixture
def configs(tmp_path):
    paths = {}
    for name, text in (("poisson", POISSON_INI), ("ce", COUNTEREXAMPLE_INI), ("finite", FINITE_INI),
                       ("zero", ZERO_INI), ("skew", POISSON_INI.replace("[truncation]", "skew = 1\n\n[truncation]"))):
        p = tmp_path / f"{name}.ini"
        p.write_text(text)
        paths[name] = str(p)
    return paths


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


def test_sample_zero_config(configs, tmp_path):
    out = tmp_path / "z.tsv"
    r = run("sample", configs["zero"], "--out", out)
    assert r.exit_code == 0, r.output
    assert out.read_text() == "# exmeas-atoms v1 window=1 seed=0 mark_cap=20\n"
    summary = json.loads((tmp_path / "z.tsv.json").read_text())
    assert summary["total_mass"] == 0.0 and summary["n_atoms"] == 0


def test_sample_format_and_determinism(configs, tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert run("sample", configs["poisson"], "-s", 3, "--seed", 7, "-o", a).exit_code == 0
    assert run("sample", configs["poisson"], "-s", 3, "--seed", 7, "-o", b).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.tsv.json").read_bytes() == (tmp_path / "b.tsv.json").read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "# exmeas-atoms v1 window=3 seed=7 mark_cap=20"
    rows = [l.split("\t") for l in lines[1:]]
    assert rows and all(len(r) == 3 and int(r[2]) >= 1 for r in rows)
    summary = json.loads((tmp_path / "a.tsv.json").read_text())
    assert summary["atomic_mass"] == sum(int(r[2]) for r in rows)
    assert summary["truncation_error"]["verdict"] == "Converged"


def test_sample_mark_cap_override(configs, tmp_path):
    out = tmp_path / "o.tsv"
    assert run("sample", configs["poisson"], "-T", 5, "-o", out).exit_code == 0
    assert "mark_cap=5" in out.read_text().splitlines()[0]


def test_sample_cap_exit(configs, tmp_path):
    r = run("sample", configs["ce"], "-o", tmp_path / "c.tsv")
    assert r.exit_code == 3
    assert "(ii)" in r.output


def test_sample_config_errors(tmp_path, configs):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nmode = kallenberg\ng = \"x+z\"\n")
    assert run("sample", bad, "-o", tmp_path / "x.tsv").exit_code == 2
    assert run("sample", tmp_path / "missing.ini", "-o", tmp_path / "x.tsv").exit_code == 2
    assert run("sample", configs["poisson"], "-s", -1, "-o", tmp_path / "x.tsv").exit_code == 2


def test_certify_exit_codes(configs):
    r = run("certify", configs["zero"])
    assert r.exit_code == 0 and "LocallyFinite" in r.output
    r = run("certify", configs["ce"])
    assert r.exit_code == 4
    assert any(line.startswith("(ii)") and "violated" in line for line in r.output.splitlines())
    r = run("certify", configs["poisson"])
    assert r.exit_code == 0
    for c in ("(a)", "(b)", "(c)"):
        assert any(line.startswith(c) for line in r.output.splitlines())


def test_certify_json(configs):
    r = run("certify", configs["ce"], "--json")
    doc = json.loads(r.output)
    assert doc["status"] == "NotLocallyFinite"
    rec = next(e for e in doc["evidence"] if e["condition"] == "(ii)")
    assert rec["status"] == "violated"


def test_certify_bad_tolerances(tmp_path, configs):
    p = tmp_path / "one.ini"
    p.write_text("[model]\nmode = kallenberg\n[tolerances]\ncutoffs = 1e6\n")
    assert run("certify", p).exit_code == 2
    assert run("certify", configs["zero"], "--tol", 0).exit_code == 2


def test_certify_inconclusive_exit(tmp_path):
    # NaN-producing marginals land in Inconclusive rather than a verdict
    p = tmp_path / "nan.ini"
    p.write_text("[model]\nmode = kallenberg\nl = \"log(x)\"\n")
    r = run("certify", p)
    assert r.exit_code == 5, r.output


def test_demo_zero_row(tmp_path):
    out = tmp_path / "d.csv"
    r = run("demo", "--T-list", "0", "-N", 10, "--csv", out)
    assert r.exit_code == 0
    rows = list(csv.reader(out.open()))
    assert rows == [["T", "mean_mass", "stderr"], ["0", "0", "0"]]


def test_demo_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("demo", "--T-list", "2,4", "-N", 50, "--seed", 3, "--csv", a).exit_code == 0
    assert run("demo", "--T-list", "2,4", "-N", 50, "--seed", 3, "--csv", b).exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_demo_bad_list():
    assert run("demo", "--T-list", "a,b").exit_code == 2


def test_verify_zero_all(configs):
    r = run("verify", configs["zero"], "-N", 50)
    assert r.exit_code == 0 and r.output.count("PASS") == 3


def test_verify_poisson_campbell(configs):
    r = run("verify", configs["poisson"], "--suite", "campbell", "-N", 2000)
    assert r.exit_code == 0 and "PASS" in r.output


def test_verify_skewed_fails(configs):
    r = run("verify", configs["skew"], "--suite", "exchangeability", "-N", 1000)
    assert r.exit_code == 1 and "FAIL" in r.output


def test_verify_gate(configs):
    r = run("verify", configs["ce"])
    assert r.exit_code == 4 and "gate" in r.output
