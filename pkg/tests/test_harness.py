"""Tests for the verification commands and the ``sole`` CLI.

Determinism is the load-bearing property here: every command must render a
byte-identical JSON report when rerun with the same seed and configuration,
and every report must validate against the published schema.
"""

import json
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from sole import harness
from sole.harness import (
    DEFAULT_SEED,
    EXIT_INCONCLUSIVE,
    EXIT_PASS,
    GENERATOR_NAME,
    RunReport,
    cmd_attn_proxy,
    cmd_bias_check,
    cmd_compress_err,
    cmd_cycles,
    cmd_layernorm_fidelity,
    cmd_softmax_fidelity,
    main,
)


def _schema():
    text = resources.files("sole").joinpath("report_schema.json").read_text()
    return json.loads(text)


# Small-but-meaningful configurations, one per command.
FAST_REPORTS = [
    lambda: cmd_bias_check(n=200_000, seed=1),
    lambda: cmd_compress_err(n=100_000, seed=1),
    lambda: cmd_compress_err(n=100_000, seed=1, dist="normal"),
    lambda: cmd_softmax_fidelity(length=64, rows=4, seed=1),
    lambda: cmd_layernorm_fidelity(channels=64, rows=4, seed=1),
    lambda: cmd_attn_proxy(seq=32, dim=16, seed=1),
    lambda: cmd_cycles(kind="layernorm", length=768, rows=16),
]


class TestRunReport:

    def test_exit_codes(self):
        ok = RunReport("cycles", {}, 0, {}, {"a": True})
        bad = RunReport("cycles", {}, 0, {}, {"a": False})
        undecided = RunReport("cycles", {}, 0, {}, {"a": True}, inconclusive=True)
        assert (ok.exit_code, bad.exit_code) == (0, 1)
        assert undecided.exit_code == EXIT_INCONCLUSIVE

    def test_json_deterministic_across_processes(self):
        # No dict ordering, timestamps, or paths may leak into the rendering.
        code = (
            "from sole.harness import cmd_compress_err;"
            "print(cmd_compress_err(n=50_000, seed=9).to_json(), end='')"
        )
        runs = [
            subprocess.run(
                [sys.executable, "-c", code], capture_output=True, text=True, check=True
            ).stdout
            for _ in range(2)
        ]
        assert runs[0] == runs[1]
        assert json.loads(runs[0])["seed"] == 9

    @pytest.mark.parametrize("make", FAST_REPORTS)
    def test_rerun_byte_identical(self, make):
        assert make().to_json() == make().to_json()

    @pytest.mark.parametrize("make", FAST_REPORTS)
    def test_schema_valid(self, make):
        jsonschema.validate(make().as_dict(), _schema())

    def test_csv_lists_every_key(self):
        rep = cmd_cycles()
        lines = rep.to_csv().splitlines()
        assert lines[0] == "key,value"
        keys = {ln.split(",", 1)[0] for ln in lines[1:]}
        assert "metrics.cycles_pingpong" in keys
        assert "config.kind" in keys
        assert {"command", "seed", "passed"} <= keys

    def test_text_shows_verdicts(self):
        txt = cmd_cycles().to_text()
        assert "[PASS] pingpong_no_slower_than_serial" in txt
        assert txt.rstrip().endswith("overall: PASS")

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            cmd_cycles().render("yaml")


class TestBiasCheck:

    def test_passes_at_full_sample_size(self):
        rep = cmd_bias_check(n=1_000_000, seed=0)
        assert rep.passed and not rep.inconclusive
        assert rep.metrics["pre_mean"] == pytest.approx(-0.6363, abs=2e-3)
        assert abs(rep.metrics["post_mean"]) < 1e-3

    def test_small_n_inconclusive(self):
        rep = cmd_bias_check(n=1000, seed=0)
        assert rep.inconclusive
        assert rep.exit_code == EXIT_INCONCLUSIVE

    def test_exact_constants_reported(self):
        m = cmd_bias_check(n=10_000, seed=0).metrics
        assert m["pre_exact"] == pytest.approx(-0.63629436, abs=1e-8)
        assert m["post_exact"] == pytest.approx(-0.00029436, abs=1e-8)


class TestCompressErr:

    def test_uniform_within_bars(self):
        rep = cmd_compress_err(n=1 << 20, seed=0)
        assert rep.passed
        assert rep.metrics["ex2_rel_err"] <= 0.005
        assert rep.metrics["sigma_rel_err"] <= 0.008

    def test_grid_sample_is_exact(self):
        # Multiples of 16 reconstruct exactly, so both errors vanish.
        x = np.arange(0, 256, 16, dtype=np.int64)
        m = harness._compress_metrics(x)
        assert m["ex2_rel_err"] == 0.0
        assert m["sigma_rel_err"] == 0.0

    def test_normal_dist_report_only(self):
        rep = cmd_compress_err(n=100_000, seed=0, dist="normal")
        assert rep.criteria == {}
        assert rep.passed  # vacuous: no criteria

    def test_unknown_dist_rejected(self):
        with pytest.raises(ValueError):
            cmd_compress_err(n=100, seed=0, dist="laplace")


class TestSoftmaxFidelity:

    def test_default_geometry_passes(self):
        rep = cmd_softmax_fidelity()
        assert rep.passed
        assert set(rep.criteria) == {"argmax_preserved", "mae_within_frozen_bound"}
        assert rep.metrics["mean_abs_err"] <= harness.SOFTMAX_MAE_BOUND

    def test_off_geometry_skips_frozen_bound(self):
        rep = cmd_softmax_fidelity(length=32, rows=4, seed=0)
        assert set(rep.criteria) == {"argmax_preserved"}
        assert rep.passed

    def test_single_element_rows(self):
        # L=1: the lone element is the max; output is the 0.818 constant and
        # the absolute error against 1.0 is exactly 47/256.
        rep = cmd_softmax_fidelity(length=1, rows=3, seed=0)
        assert rep.metrics["max_abs_err"] == 47 / 256
        assert rep.criteria["argmax_preserved"]


class TestLayernormFidelity:

    def test_default_geometry_passes(self):
        rep = cmd_layernorm_fidelity()
        assert rep.passed
        assert rep.metrics["mean_abs_err"] <= harness.LAYERNORM_MAE_BOUND

    def test_bound_holds_across_widths(self):
        for channels in (16, 256):
            rep = cmd_layernorm_fidelity(channels=channels, rows=8, seed=0)
            assert rep.passed, (channels, rep.metrics)


class TestAttnProxy:

    def test_default_passes(self):
        rep = cmd_attn_proxy()
        assert rep.passed
        assert rep.metrics["cosine_mean"] >= harness.ATTN_COSINE_MIN
        assert rep.metrics["scale_exp"] == 5

    def test_cosine_bounded_by_one(self):
        rep = cmd_attn_proxy(seq=16, dim=8, seed=2)
        assert rep.metrics["cosine_min"] <= rep.metrics["cosine_mean"] <= 1.0


class TestCycles:

    def test_frozen_counts(self):
        rep = cmd_cycles(kind="softmax", length=785, rows=16, lanes=32)
        assert rep.metrics["cycles_pingpong"] == 427
        assert rep.metrics["cycles_serial"] == 832
        assert rep.metrics["beats_per_row"] == 25

    def test_layernorm_frozen_counts(self):
        rep = cmd_cycles(kind="layernorm", length=768, rows=16, lanes=32)
        assert rep.metrics["cycles_pingpong"] == 411
        assert rep.metrics["cycles_serial"] == 816

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            cmd_cycles(kind="gemm")


class TestCLI:

    def test_json_to_stdout(self, capsys):
        code = main(["cycles", "--format", "json"])
        assert code == EXIT_PASS
        doc = json.loads(capsys.readouterr().out)
        assert doc["command"] == "cycles"
        jsonschema.validate(doc, _schema())

    def test_out_file(self, tmp_path, capsys):
        dest = tmp_path / "report.json"
        main(["cycles", "--format", "json", "--out", str(dest)])
        assert capsys.readouterr().out == ""
        assert json.loads(dest.read_text())["command"] == "cycles"

    def test_seed_flag_reaches_report(self, capsys):
        main(["compress-err", "--n", "50000", "--seed", "7", "--format", "json"])
        assert json.loads(capsys.readouterr().out)["seed"] == 7

    def test_seed_env_fallback(self, capsys, monkeypatch):
        monkeypatch.setenv("SOLE_SEED", "11")
        main(["compress-err", "--n", "50000", "--format", "json"])
        assert json.loads(capsys.readouterr().out)["seed"] == 11

    def test_flag_beats_env(self, capsys, monkeypatch):
        monkeypatch.setenv("SOLE_SEED", "11")
        main(["compress-err", "--n", "50000", "--seed", "3", "--format", "json"])
        assert json.loads(capsys.readouterr().out)["seed"] == 3

    def test_default_seed_constant(self, capsys, monkeypatch):
        monkeypatch.delenv("SOLE_SEED", raising=False)
        main(["cycles", "--format", "json"])
        assert json.loads(capsys.readouterr().out)["seed"] == DEFAULT_SEED

    def test_inconclusive_exit_code(self, capsys):
        assert main(["bias-check", "--n", "1000"]) == EXIT_INCONCLUSIVE

    def test_text_format_smoke(self, capsys):
        main(["cycles", "--format", "text"])
        out = capsys.readouterr().out
        assert f"(seed {DEFAULT_SEED}, {GENERATOR_NAME})" in out

    def test_csv_format_smoke(self, capsys):
        main(["cycles", "--format", "csv"])
        assert capsys.readouterr().out.startswith("key,value")

    def test_calibrate_round_trip(self, tmp_path, capsys):
        from sole.calib import PTFParams
        from sole.tensorio import save_tensor

        rng = np.random.Generator(np.random.Philox(key=np.uint64(5)))
        x = rng.normal(size=(64, 8)) * np.exp2(np.arange(8) % 4)
        src = tmp_path / "acts.bin"
        dest = tmp_path / "params.json"
        save_tensor(src, x)
        code = main(["calibrate", "--input", str(src), "--out", str(dest)])
        assert code == EXIT_PASS
        params = PTFParams.from_json(dest.read_text())
        assert params.alphas.shape == (8,)
        assert params.alphas.max() >= 1  # the spread pattern engages the exponents

    def test_calibrate_rejects_1d(self, tmp_path):
        from sole.tensorio import save_tensor

        src = tmp_path / "flat.bin"
        save_tensor(src, np.arange(4.0))
        with pytest.raises(SystemExit):
            main(["calibrate", "--input", str(src)])

    def test_installed_entry_point(self):
        # The console script must exist and agree with main().
        proc = subprocess.run(
            [sys.executable, "-m", "sole.harness"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2  # argparse: missing subcommand
