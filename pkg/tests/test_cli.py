import json
import math
import os

import numpy as np
import pytest

from nablatc.cli import main
from nablatc.signals import read_signal_csv


def run(argv):
    return main(argv)


def test_eval_gl_writes_body_rows(tmp_path):
    out = str(tmp_path / "out.csv")
    assert run(
        ["eval", "--kind", "gl", "--order", "0.5", "--signal", "sin10k",
         "--weight", "case1", "--N", "100", "--out", out]
    ) == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "k,value"
    assert len(lines) == 101  # header + one row per evaluation point


def test_eval_order_zero_reproduces_signal(tmp_path):
    out = str(tmp_path / "id.csv")
    run(["eval", "--kind", "gl", "--order", "0", "--signal", "sin10k",
         "--N", "20", "--out", out])
    sig = read_signal_csv(out)
    expected = [math.sin(10.0 * k) for k in range(1, 21)]
    np.testing.assert_allclose(sig.window(1, 19), expected[1:], rtol=1e-15)
    assert sig.at(0) == pytest.approx(expected[0])


def test_eval_gl_vs_rl_difference(tmp_path):
    g_out = str(tmp_path / "gl.csv")
    r_out = str(tmp_path / "rl.csv")
    for kind, out in (("gl", g_out), ("rl", r_out)):
        assert run(
            ["eval", "--kind", kind, "--order", "0.5", "--signal", "sin10k",
             "--weight", "case2", "--N", "100", "--out", out]
        ) == 0
    g = read_signal_csv(g_out)
    r = read_signal_csv(r_out)
    assert np.max(np.abs(g.values - r.values)) <= 1.2e-15


def test_eval_csv_signal_roundtrip(tmp_path):
    first = str(tmp_path / "first.csv")
    second = str(tmp_path / "second.csv")
    run(["eval", "--kind", "gl", "--order", "-1", "--signal", "poly:0,1",
         "--N", "10", "--out", first])
    # feed the output back in as a CSV signal
    assert run(
        ["eval", "--kind", "gl", "--order", "0", "--signal", first,
         "--N", "9", "--out", second]
    ) == 0


def test_byte_identical_reruns(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    args = ["eval", "--kind", "caputo", "--order", "1.5", "--signal", "sin10k",
            "--weight", "case4", "--N", "64", "--out"]
    run(args + [a])
    run(args + [b])
    assert open(a, "rb").read() == open(b, "rb").read()


def test_exit_code_config_error(tmp_path):
    out = str(tmp_path / "x.csv")
    # integer order for the fractional kind is a configuration error
    assert run(
        ["eval", "--kind", "rl", "--order", "1", "--signal", "sin10k", "--out", out]
    ) == 2
    assert not os.path.exists(out)
    assert run(
        ["eval", "--kind", "gl", "--order", "0.5", "--signal", "nosuch",
         "--out", out]
    ) == 2


def test_exit_code_numeric_error(tmp_path):
    out = str(tmp_path / "x.csv")
    # rate-0.5 weight underflows the zero threshold at this horizon
    code = run(
        ["eval", "--kind", "gl", "--order", "0.5", "--signal", "sin10k",
         "--weight", "exp:0.5", "--N", "1200", "--out", out]
    )
    assert code == 3
    assert not os.path.exists(out)


def test_argparse_usage_error_is_exit_2():
    with pytest.raises(SystemExit) as exc:
        run(["eval", "--kind", "nosuchkind", "--order", "1", "--signal", "s",
             "--out", "o"])
    assert exc.value.code == 2


def test_taylor_subcommand_matches_eval(tmp_path):
    t_out = str(tmp_path / "taylor.csv")
    e_out = str(tmp_path / "eval.csv")
    common = ["--kind", "gl", "--order", "0.5", "--signal", "sin10k",
              "--weight", "case3", "--N", "16"]
    assert run(["taylor", *common, "--rep", "current", "--out", t_out]) == 0
    assert run(["eval", *common, "--out", e_out]) == 0
    t = read_signal_csv(t_out)
    e = read_signal_csv(e_out)
    np.testing.assert_allclose(t.values, e.values, atol=1e-11)


def test_verify_default_passes(tmp_path):
    out = str(tmp_path / "report.json")
    assert run(["verify", "--only", "integer-defect", "--out", out]) == 0
    payload = json.loads(open(out).read())
    assert payload["all_pass"] is True
    entry = payload["reports"][0]
    assert set(entry) >= {"identity-id", "params", "max_abs_dev", "tolerance", "pass", "seed"}


def test_verify_perturbation_flagged(tmp_path):
    out = str(tmp_path / "report.json")
    assert run(
        ["verify", "--only", "gl-rl-agree", "--perturb", "1e-6", "--out", out]
    ) == 1
    payload = json.loads(open(out).read())
    assert payload["failures"] > 0
    # the fault hook is restored afterwards
    import nablatc.operators as operators

    assert operators._FAULT_EPS == 0.0


def test_verify_unknown_only_is_config_error(tmp_path):
    assert run(["verify", "--only", "bogus-identity", "--out",
                str(tmp_path / "r.json")]) == 2


def test_solve_subcommand(tmp_path):
    out = str(tmp_path / "sol.csv")
    assert run(
        ["solve", "--alpha", "0.5", "--mu", "-0.2", "--weight", "one",
         "--x0", "1", "--N", "12", "--out", out]
    ) == 0
    sol = read_signal_csv(out)
    assert sol.values[0] == 1.0
    assert len(sol.values) == 13


def test_laplace_subcommand_value(capsys):
    assert run(
        ["laplace", "--signal", "sin10k", "--N", "400", "--s-re", "0.9",
         "--s-im", "0.1"]
    ) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["converged"] is True


def test_laplace_rule_check(capsys):
    assert run(
        ["laplace", "--signal", "sin10k", "--N", "2000", "--s-re", "0.95",
         "--s-im", "0.1", "--rule", "gl", "--order", "0.5", "--lambda", "0"]
    ) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["pass"] is True


def test_laplace_rule_requires_lambda():
    assert run(
        ["laplace", "--signal", "sin10k", "--N", "100", "--s-re", "0.9",
         "--rule", "gl"]
    ) == 2


def test_laplace_rule_with_initial_conditions(capsys):
    assert run(
        ["laplace", "--signal", "sin10k", "--N", "1500", "--s-re", "0.9",
         "--s-im", "0.2", "--rule", "caputo", "--order", "1.5", "--lambda", "0"]
    ) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True
    assert run(
        ["laplace", "--signal", "sin10k", "--N", "100", "--s-re", "0.9",
         "--rule", "int", "--order", "1.5", "--lambda", "0"]
    ) == 2


def test_eval_weight_from_csv(tmp_path):
    # build a weight file on the extended grid, then consume it
    wpath = str(tmp_path / "w.csv")
    lines = ["k,value"] + [f"{float(k)!r},{1.0 + 0.5 * math.cos(k)!r}" for k in range(-1, 13)]
    open(wpath, "w").write("\n".join(lines) + "\n")
    out = str(tmp_path / "y.csv")
    assert run(
        ["eval", "--kind", "caputo", "--order", "0.5", "--signal", "sin10k",
         "--weight", wpath, "--N", "12", "--history", "1", "--out", out]
    ) == 0
    assert len(open(out).read().strip().splitlines()) == 13


def test_repro_targets(tmp_path):
    outdir = str(tmp_path / "repro")
    for target in ("fig1", "fig2", "fig3", "fig4", "error-table"):
        assert run(["repro", target, "--outdir", outdir]) == 0
    names = sorted(os.listdir(outdir))
    assert len([n for n in names if n.startswith("fig1")]) == 4
    assert len([n for n in names if n.startswith("fig2")]) == 8
    assert len([n for n in names if n.startswith("fig3")]) == 8
    assert len([n for n in names if n.startswith("fig4")]) == 12
    assert "error_table.csv" in names


def test_repro_fig3_case1_column_identically_zero(tmp_path):
    outdir = str(tmp_path / "repro")
    run(["repro", "fig3", "--outdir", outdir])
    sig = read_signal_csv(os.path.join(outdir, "fig3_case1_minus_case1_alphap0_5.csv"))
    np.testing.assert_array_equal(sig.body, np.zeros(99))


def test_repro_error_table_values(tmp_path):
    outdir = str(tmp_path / "repro")
    run(["repro", "error-table", "--outdir", outdir])
    rows = open(os.path.join(outdir, "error_table.csv")).read().strip().splitlines()
    assert rows[0] == "case,min_gl_minus_rl,max_gl_minus_rl"
    assert len(rows) == 5
    for row in rows[1:]:
        _, lo, hi = row.split(",")
        assert -5e-15 <= float(lo) <= float(hi) <= 5e-15


def test_tolerance_scale_env(tmp_path, monkeypatch):
    # an absurdly small scale makes rounding-level deviations fail
    monkeypatch.setenv("NT_TOLERANCE_SCALE", "1e-12")
    out = str(tmp_path / "r.json")
    assert run(["verify", "--only", "gl-rl-agree", "--out", out]) == 1
    monkeypatch.setenv("NT_TOLERANCE_SCALE", "1.0")
    assert run(["verify", "--only", "gl-rl-agree", "--out", out]) == 0
