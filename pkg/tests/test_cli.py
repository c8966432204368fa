import csv
import json

import numpy as np
import pytest

from bosonpow import cli

BASE = """
[model]
variant = nelson
d = 3
nu = 1.0
g = 1.0
{model_extra}

[sampler]
T = 2.0
dt = 0.1
sweeps = 300
burn_in = 50
seed = 7
{sampler_extra}

[query]
k = {ks}
{query_extra}
"""


def write_config(tmp_path, name="run.ini", ks="0.5, 1, 2", model_extra="", sampler_extra="", query_extra=""):
    path = tmp_path / name
    path.write_text(BASE.format(ks=ks, model_extra=model_extra, sampler_extra=sampler_extra, query_extra=query_extra))
    return str(path)


def read_table(path):
    with open(path) as fh:
        header = fh.readline()
        rows = list(csv.DictReader(fh))
    return header, rows


def test_sample_then_expect(tmp_path, capsys):
    cfg = write_config(tmp_path, query_extra="psi = fractional:1 | log_gamma\na = 0.5")
    out = str(tmp_path / "out")
    assert cli.main(["sample", "--config", cfg, "--out", out]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n_samples"] > 0 and 0 <= info["mean_w"] <= info["w_inf"]
    assert cli.main(["expect", "--config", cfg, "--out", out]) == 0
    header, rows = read_table(tmp_path / "out" / "expect.csv")
    assert header.startswith("# schema=bosonpow-expect/1 config_hash=")
    assert [r["query"] for r in rows] == ["k=0.5", "k=1", "k=2", "u^0.5", "log(1+u)"]
    k2 = rows[2]
    assert float(k2["corridor_lower"]) < float(k2["corridor_upper"])
    assert rows[3]["jensen_bound"] != ""
    for r in rows:
        assert float(r["mc_stderr"]) >= 0 and float(r["det_error"]) >= 0


def test_frozen_config(tmp_path, capsys):
    cfg = write_config(tmp_path, sampler_extra="frozen = true")
    out = str(tmp_path / "out")
    assert cli.main(["sample", "--config", cfg, "--out", out]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["stderr_w"] == 0.0


def test_missing_nu_names_the_field(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[model]\nvariant = nelson\ng = 1\n[query]\nk = 1\n")
    assert cli.main(["sample", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "model.nu" in capsys.readouterr().err


def test_unknown_key_is_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, sampler_extra="sweepz = 3")
    assert cli.main(["sample", "--config", cfg]) == 2
    assert "sampler.sweepz" in capsys.readouterr().err


def test_hash_mismatch_refused(tmp_path, capsys):
    cfg1 = write_config(tmp_path, "a.ini")
    cfg2 = write_config(tmp_path, "b.ini", model_extra="cutoff_width = 2.0")
    out = str(tmp_path / "out")
    assert cli.main(["sample", "--config", cfg1, "--out", out]) == 0
    assert cli.main(["expect", "--config", cfg2, "--out", out]) == 2
    assert "refusing" in capsys.readouterr().err


def test_duplicate_k_warns(tmp_path, caplog):
    cfg = write_config(tmp_path, ks="1, 1, 2")
    out = str(tmp_path / "out")
    assert cli.main(["sample", "--config", cfg, "--out", out]) == 0
    assert cli.main(["expect", "--config", cfg, "--out", out]) == 0
    assert "duplicate k=1" in caplog.text
    _, rows = read_table(tmp_path / "out" / "expect.csv")
    assert len(rows) == 2


@pytest.mark.parametrize("extra,ks,field", [
    ("g_sweep =", "1", "model.g_sweep"),
    ("g_sweep = 0.5, 1", "0.5, 1", "query.k"),
])
def test_sweep_rejections(tmp_path, capsys, extra, ks, field):
    cfg = write_config(tmp_path, ks=ks, model_extra=extra)
    assert cli.main(["sweep-g", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert field in capsys.readouterr().err


def test_sweep_g(tmp_path):
    cfg = write_config(tmp_path, ks="1, 2", model_extra="g_sweep = 0.5, 1.5", query_extra="a = 0.5")
    assert cli.main(["sweep-g", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    header, rows = read_table(tmp_path / "o" / "sweep_g.csv")
    assert "schema=bosonpow-sweep/1" in header
    assert [float(r["g"]) for r in rows] == [0.5, 0.5, 1.5, 1.5]
    for r in rows:
        if r["query"] == "k=1":
            assert float(r["normalized"]) == pytest.approx(float(r["mean_w"]), rel=1e-12)


def test_env_override(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path)
    monkeypatch.setenv("BOSONPOW_SAMPLER__FROZEN", "yes")
    assert cli.main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert json.loads(capsys.readouterr().out)["stderr_w"] == 0.0
    monkeypatch.setenv("BOSONPOW_SAMPLER__BOGUS", "1")
    assert cli.main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_repeated_runs_are_identical(tmp_path):
    cfg = write_config(tmp_path, sampler_extra="chains = 2")
    for d in ("a", "b"):
        assert cli.main(["sample", "--config", cfg, "--out", str(tmp_path / d)]) == 0
        assert cli.main(["expect", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for f in ("ensemble.csv", "expect.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert cli.main(["sample", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "8"]) == 0
    assert (tmp_path / "a" / "ensemble.csv").read_bytes() != (tmp_path / "c" / "ensemble.csv").read_bytes()


def test_validate_passes(tmp_path, capsys):
    assert cli.main(["validate", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    assert report["passed"] and len(report["checks"]) >= 8


def test_validate_reports_broken_coefficients(monkeypatch, capsys):
    from bosonpow import combinatorics

    original = combinatorics.a_coefficient
    monkeypatch.setattr(combinatorics, "a_coefficient", lambda m, r: -original(m, r))
    assert cli.main(["validate"]) == 1
    report = json.loads(capsys.readouterr().out)
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert "a_coefficient_equals_stirling2" in failed


def test_validate_reports_negative_kernel(monkeypatch, capsys):
    from bosonpow import pair_potential

    build = pair_potential.KernelTable.build.__func__

    def negated(cls, *args, **kwargs):
        table = build(cls, *args, **kwargs)
        table.values = -table.values
        return table

    monkeypatch.setattr(pair_potential.KernelTable, "build", classmethod(negated))
    assert cli.main(["validate"]) == 1
    report = json.loads(capsys.readouterr().out)
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert "kernel_positive_on_diagonal_and_bounded" in failed


def test_missing_config_flag(capsys):
    assert cli.main(["sample"]) == 2
