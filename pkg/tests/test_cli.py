import json

import numpy as np
import pytest

import gibbs_mcid as gm
from gibbs_mcid import cli

EX2_INI = """\
[scenario]
name = example2
support_hint = -4, 6

[marginal]
kind = normal

[marginal.params]
mu = 1.0
sigma = 1.0

[eta]
kind = cdf-link
"""


def run_cli(args, capsys=None):
    code = cli.run(args)
    return code


def read_config_line(path):
    for line in path.read_text().splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise AssertionError("no config header")


def test_estimate_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["estimate", "--scenario", "example2", "--n", "120", "--seed", "7",
            "--reps", "200"]
    assert cli.run(base + ["--out", str(out1)]) == 0
    assert cli.run(base + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_posterior_auto_omega_summary_in_range(tmp_path):
    out = tmp_path / "post.csv"
    code = cli.run([
        "posterior", "--scenario", "example3", "--n", "250", "--omega", "auto",
        "--level", "0.90", "--seed", "1", "--out", str(out),
    ])
    assert code == 0
    body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert body[0] == "method,mean,lo,hi,level,omega"
    _, mean, lo, hi, level, omega = body[1].split(",")
    data = gm.generate(gm.builtin_scenario("example3"), 250, 1)
    assert float(lo) <= float(hi)
    assert data.x.min() <= float(lo) and float(hi) <= data.x.max()
    # auto routes through calibration and records the ratio in the header
    meta = [l for l in out.read_text().splitlines() if l.startswith("# meta: ")]
    assert "omega_ratio_to_n^-0.4" in meta[0]


def test_every_subcommand_rerun_byte_identical(tmp_path):
    cases = {
        "generate": ["--scenario", "example1", "--n", "50", "--seed", "3"],
        "estimate": ["--scenario", "example2", "--n", "60", "--seed", "3", "--reps", "120"],
        "posterior": ["--scenario", "example3", "--n", "80", "--seed", "3", "--omega", "0.4",
                      "--draws", "2000"],
        "calibrate": ["--scenario", "example2", "--n", "60", "--seed", "3"],
        "study": ["--scenario", "example4", "--n", "70", "--seed", "3", "--reps", "4",
                  "--draws", "1000"],
        "rate-check": ["--scenario", "jump", "--n", "50,100,200,800", "--seed", "3",
                       "--reps", "6"],
        "compare-logistic": ["--scenario", "logit-demo-a", "--n", "60", "--seed", "3",
                             "--draws", "1500"],
    }
    for cmd, args in cases.items():
        out1 = tmp_path / f"{cmd}-1.csv"
        assert cli.run([cmd, *args, "--out", str(out1)]) == 0, cmd
        produced1 = [out1] if cmd != "study" else [
            tmp_path / f"{cmd}-1.estimates.csv", tmp_path / f"{cmd}-1.intervals.csv"
        ]
        cfg = read_config_line(produced1[0])
        out2 = tmp_path / f"{cmd}-2.csv"
        argv = cli.argv_from_config(cfg) + ["--out", str(out2)]
        assert cli.run(argv) == 0, cmd
        produced2 = [out2] if cmd != "study" else [
            tmp_path / f"{cmd}-2.estimates.csv", tmp_path / f"{cmd}-2.intervals.csv"
        ]
        for p1, p2 in zip(produced1, produced2):
            assert p1.read_bytes() == p2.read_bytes(), cmd


def test_unknown_scenario_exit_code(tmp_path, capsys):
    code = cli.run(["estimate", "--scenario", "examplezzz", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error: validation:")
    assert "example1" in err


def test_unwritable_output_exit_code(tmp_path, capsys):
    code = cli.run([
        "generate", "--scenario", "example2", "--n", "10", "--seed", "1",
        "--out", str(tmp_path / "no" / "such" / "dir.csv"),
    ])
    assert code == 1


def test_bad_level_exit_code(tmp_path):
    code = cli.run(["estimate", "--scenario", "example2", "--level", "1.5",
                    "--out", str(tmp_path / "x.csv")])
    assert code == 1


def test_ignored_flags_rejected(tmp_path, capsys):
    assert cli.run(["study", "--scenario", "example2", "--prior", "normal:0,1",
                    "--out", str(tmp_path / "x.csv")]) == 1
    assert "prior" in capsys.readouterr().err
    assert cli.run(["estimate", "--scenario", "example2", "--sampler", "metropolis",
                    "--out", str(tmp_path / "x.csv")]) == 1


def test_config_file_equivalent_to_builtin(tmp_path):
    p = tmp_path / "ex2.ini"
    p.write_text(EX2_INI)
    loaded = cli.load_scenario_config(str(p))
    assert loaded == gm.builtin_scenario("example2")


def test_config_file_bad_sigma_names_field(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(EX2_INI.replace("sigma = 1.0", "sigma = -1"))
    with pytest.raises(gm.ValidationError, match=r"marginal\.params\.sigma"):
        cli.load_scenario_config(str(p))


def test_config_file_unknown_key_strict(tmp_path):
    p = tmp_path / "bad2.ini"
    p.write_text(EX2_INI.replace("[eta]\nkind = cdf-link", "[eta]\nkind = cdf-link\netta = 2"))
    with pytest.raises(gm.ConfigError, match="etta"):
        cli.load_scenario_config(str(p))


def test_config_file_unknown_key_reports_line(tmp_path):
    p = tmp_path / "bad3.ini"
    text = EX2_INI + "\n[marginal.params2]\nz = 1\n"
    p.write_text(text)
    with pytest.raises(gm.ConfigError, match="line"):
        cli.load_scenario_config(str(p))


def test_config_gamma_rate_scale_exclusive(tmp_path):
    base = """\
[scenario]
name = g
support_hint = 0.001, 20

[marginal]
kind = gamma

[marginal.params]
shape = 2.0
{params}

[eta]
kind = cdf-link
"""
    p = tmp_path / "g.ini"
    p.write_text(base.format(params="rate = 2.0"))
    s = cli.load_scenario_config(str(p))
    assert s.marginal == gm.Gamma(2.0, 2.0)
    p.write_text(base.format(params="scale = 0.5"))
    s2 = cli.load_scenario_config(str(p))
    assert s2.marginal == gm.Gamma(2.0, 2.0)
    p.write_text(base.format(params="rate = 2.0\nscale = 0.5"))
    with pytest.raises(gm.ConfigError, match="exactly one"):
        cli.load_scenario_config(str(p))
    p.write_text(base.format(params=""))
    with pytest.raises(gm.ConfigError):
        cli.load_scenario_config(str(p))


def test_cli_accepts_scenario_file(tmp_path):
    p = tmp_path / "ex2.ini"
    p.write_text(EX2_INI)
    out = tmp_path / "gen.csv"
    assert cli.run(["generate", "--scenario", str(p), "--n", "20", "--seed", "2",
                    "--out", str(out)]) == 0
    body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert body[0] == "x,y"
    assert len(body) == 21


def test_generate_matches_library(tmp_path):
    out = tmp_path / "gen.csv"
    assert cli.run(["generate", "--scenario", "example2", "--n", "30", "--seed", "9",
                    "--out", str(out)]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=4)
    d = gm.generate(gm.builtin_scenario("example2"), 30, 9)
    assert np.allclose(rows[:, 0], d.x)
    assert np.array_equal(rows[:, 1].astype(int), d.y)


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GIBBS_MCID_THREADS", "1")
    out = tmp_path / "t.csv"
    assert cli.run(["estimate", "--scenario", "example2", "--n", "40", "--seed", "1",
                    "--reps", "50", "--out", str(out)]) == 0
    monkeypatch.setenv("GIBBS_MCID_THREADS", "zebra")
    assert cli.run(["estimate", "--scenario", "example2", "--n", "40", "--seed", "1",
                    "--reps", "50", "--out", str(out)]) == 1


def test_study_emits_two_tables(tmp_path):
    out = tmp_path / "study.csv"
    assert cli.run(["study", "--scenario", "example3", "--n", "60", "--reps", "3",
                    "--seed", "2", "--draws", "800", "--out", str(out)]) == 0
    est = tmp_path / "study.estimates.csv"
    ivl = tmp_path / "study.intervals.csv"
    assert est.exists() and ivl.exists()
    for line in ivl.read_text().splitlines():
        if line.startswith("example3"):
            cov = float(line.split(",")[3])
            assert 0.0 <= cov <= 1.0
