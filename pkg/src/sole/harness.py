"""Verification commands and the ``sole`` command-line front end.

Every command builds its inputs from a 64-bit seed through the package's
Philox convention, runs a kernel against its oracle, and emits a
:class:`RunReport` whose JSON rendering is byte-identical across reruns with
the same configuration and seed (reports carry no timestamps, paths, or other
ambient state).  Exit status: 0 when every criterion passed, 2 when the run
was marked inconclusive (for example too few Monte-Carlo samples), 1 otherwise.

The fidelity pass bars marked "frozen" below are regression bounds: measured
once against the audited oracle path, then pinned.  A change that moves a
metric past one of them is a behavior change, not noise.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import calib, oracle, pipemodel, tensorio
from .ailayernorm import AffineParams, ailayernorm_real, dynamic_compress, square_decompress
from .e2softmax import SoftmaxConfig, e2softmax_real

__all__ = [
    "RunReport",
    "cmd_bias_check",
    "cmd_compress_err",
    "cmd_softmax_fidelity",
    "cmd_layernorm_fidelity",
    "cmd_attn_proxy",
    "cmd_cycles",
    "main",
    "GENERATOR_NAME",
    "DEFAULT_SEED",
    "EXIT_PASS",
    "EXIT_FAIL",
    "EXIT_INCONCLUSIVE",
]

GENERATOR_NAME = "philox4x64-10"
DEFAULT_SEED = 0
SEED_ENV_VAR = "SOLE_SEED"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2

# --- pass bars -------------------------------------------------------------
# Divider bias window around the analytic means (-0.6363 and -0.0003).
BIAS_PRE_RANGE = (-0.65, -0.62)
BIAS_POST_TOL = 0.01
# Monte-Carlo sample floor below which bias estimates are inconclusive.
BIAS_MIN_SAMPLES = 100_000
# Compression error bars for uniform inputs.
COMPRESS_EX2_TOL = 0.005
COMPRESS_SIGMA_TOL = 0.008
# Regression bounds frozen from the audited baseline runs; reruns must not
# regress past them.  Softmax MAE grows as rows shorten (4-bit codes spread
# over fewer, larger probabilities), so its bound only applies at the audited
# geometry below.  Audited values: softmax MAE 0.00105 (L=785, rows=16, f=4;
# <= 0.00107 over seeds 0-4), layernorm MAE <= 0.024 (C in [16, 3072], seeds
# 0-3), attention cosine 0.9812 (seq=64, dim=32, seed 0).
SOFTMAX_MAE_BOUND = 1.5e-3
SOFTMAX_AUDITED_GEOMETRY = (785, 16, 4)  # (length, rows, scale_exp)
LAYERNORM_MAE_BOUND = 0.05
ATTN_COSINE_MIN = 0.98


@dataclass(frozen=True)
class RunReport:
    """One command's outcome: configuration echo, metrics, verdicts."""

    command: str
    config: dict
    seed: int
    metrics: dict
    criteria: dict
    inconclusive: bool = False
    generator: str = GENERATOR_NAME

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())

    @property
    def exit_code(self) -> int:
        if self.inconclusive:
            return EXIT_INCONCLUSIVE
        return EXIT_PASS if self.passed else EXIT_FAIL

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "criteria": self.criteria,
            "generator": self.generator,
            "inconclusive": self.inconclusive,
            "metrics": self.metrics,
            "passed": self.passed,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        flat: dict = {"command": self.command, "seed": self.seed}
        for group in ("config", "metrics", "criteria"):
            for k, v in getattr(self, group).items():
                flat[f"{group}.{k}"] = v
        flat["generator"] = self.generator
        flat["inconclusive"] = self.inconclusive
        flat["passed"] = self.passed
        lines = [f"{k},{flat[k]}" for k in sorted(flat)]
        return "\n".join(["key,value"] + lines) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.command}  (seed {self.seed}, {self.generator})"]
        for k in sorted(self.config):
            lines.append(f"  {k:<22} {self.config[k]}")
        lines.append("  metrics:")
        for k in sorted(self.metrics):
            v = self.metrics[k]
            lines.append(f"    {k:<20} {v:.6g}" if isinstance(v, float) else f"    {k:<20} {v}")
        for k in sorted(self.criteria):
            lines.append(f"  [{'PASS' if self.criteria[k] else 'FAIL'}] {k}")
        if self.inconclusive:
            lines.append("  INCONCLUSIVE")
        lines.append(f"  overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "text":
            return self.to_text()
        raise ValueError(f"unknown report format {fmt!r}")


def cmd_bias_check(n: int = 1_000_000, seed: int = DEFAULT_SEED) -> RunReport:
    """Monte-Carlo check of the divider's error before/after correction.

    Passes when the uncorrected normalized bias lands in the analytic window
    around -0.636 and the corrected bias is within +/-0.01 of zero.  Runs
    with fewer than 1e5 samples are reported but flagged inconclusive.
    """
    est = oracle.aldivision_bias_mc(n, seed)
    ci = 1.96
    metrics = {
        "pre_mean": est.pre,
        "pre_ci95": ci * est.pre_stderr,
        "post_mean": est.post,
        "post_ci95": ci * est.post_stderr,
        "pre_exact": oracle.PRE_BIAS_EXACT,
        "post_exact": oracle.POST_BIAS_EXACT,
    }
    criteria = {
        "pre_bias_in_window": BIAS_PRE_RANGE[0] <= est.pre <= BIAS_PRE_RANGE[1],
        "post_bias_within_tol": abs(est.post) <= BIAS_POST_TOL,
    }
    return RunReport(
        command="bias-check",
        config={"n": n},
        seed=seed,
        metrics=metrics,
        criteria=criteria,
        inconclusive=n < BIAS_MIN_SAMPLES,
    )


def _compress_samples(n: int, seed: int, dist: str) -> np.ndarray:
    rng = oracle.rng_from_seed(seed)
    if dist == "uniform":
        return rng.integers(0, 256, size=n, dtype=np.int64)
    if dist == "normal":
        # Report-only distribution: folded normal, sigma 64, clipped to range.
        raw = np.abs(np.floor(rng.normal(0.0, 64.0, size=n) + 0.5))
        return np.clip(raw, 0, 255).astype(np.int64)
    raise ValueError(f"unknown distribution {dist!r}")


def _compress_metrics(x: np.ndarray) -> dict:
    """Statistic distortion of the 4-bit square compression on a sample.

    Treats the compressor as a magnitude quantizer x -> x_hat = y << (2 + 2s)
    and reports how far the sample's second moment and standard deviation move
    under it; E(x^2) on the compressed side comes from the decompressed squares
    so the shift-reconstruction path is the one being measured.
    """
    y, s = dynamic_compress(x)
    comp_sq = square_decompress(y, s, np.zeros_like(y))
    xhat = (y << (2 + 2 * s)).astype(np.float64)
    xt = x.astype(np.float64)
    mean_true = float(np.mean(xt**2))
    mean_comp = float(np.mean(comp_sq.astype(np.float64)))
    sig_true = float(np.std(xt))
    sig_comp = float(np.std(xhat))
    ex2_rel = abs(mean_comp / mean_true - 1.0) if mean_true else 0.0
    sig_rel = abs(sig_comp / sig_true - 1.0) if sig_true else 0.0
    return {
        "ex2_mean_true": mean_true,
        "ex2_mean_compressed": mean_comp,
        "ex2_rel_err": ex2_rel,
        "sigma_true": sig_true,
        "sigma_compressed": sig_comp,
        "sigma_rel_err": sig_rel,
    }


def cmd_compress_err(
    n: int = 1 << 20, seed: int = DEFAULT_SEED, dist: str = "uniform"
) -> RunReport:
    """Relative error the 4-bit square compression injects into E(x^2) and sigma.

    The pass bars (0.5% on the second moment, 0.8% on the standard deviation)
    apply to the uniform distribution; other distributions are report-only.
    """
    x = _compress_samples(n, seed, dist)
    metrics = _compress_metrics(x)
    ex2_rel = metrics["ex2_rel_err"]
    sig_rel = metrics["sigma_rel_err"]
    criteria = {}
    if dist == "uniform":
        criteria = {
            "ex2_rel_err_within_0.5pct": ex2_rel <= COMPRESS_EX2_TOL,
            "sigma_rel_err_within_0.8pct": sig_rel <= COMPRESS_SIGMA_TOL,
        }
    return RunReport(
        command="compress-err",
        config={"n": n, "dist": dist},
        seed=seed,
        metrics=metrics,
        criteria=criteria,
    )


def _report_metrics(rep: oracle.ErrorReport) -> dict:
    out = {
        "max_abs_err": rep.max_abs_err,
        "mean_err": rep.mean_err,
        "mean_abs_err": rep.mean_abs_err,
        "rel_err": rep.rel_err,
        "n": rep.n,
    }
    if rep.kl_div is not None:
        out["kl_div"] = rep.kl_div
    return out


def cmd_softmax_fidelity(
    length: int = 785,
    rows: int = 16,
    seed: int = DEFAULT_SEED,
    scale_exp: int = 4,
) -> RunReport:
    """Integer softmax versus the float oracle on Gaussian logit rows.

    Logits are quantized onto the 2**-scale_exp grid; the oracle runs on the
    dequantized grid values so the metrics isolate kernel error rather than
    input rounding.  Criteria: every row's true argmax attains the maximal
    kernel output, and mean absolute error stays under the frozen bound.
    """
    rng = oracle.rng_from_seed(seed)
    logits = rng.standard_normal((rows, length))
    q = np.floor(logits * 2.0**scale_exp + 0.5).astype(np.int64)
    cfg = SoftmaxConfig(input_scale_exp=scale_exp)
    approx = e2softmax_real(q, cfg)
    ref = oracle.softmax_ref(q * 2.0**-scale_exp)
    rep = oracle.compare(approx, ref)
    hit = approx[np.arange(rows), np.argmax(ref, axis=1)] == approx.max(axis=1)
    argmax_rate = float(np.mean(hit))
    metrics = _report_metrics(rep) | {"argmax_rate": argmax_rate}
    criteria = {"argmax_preserved": argmax_rate == 1.0}
    if (length, rows, scale_exp) == SOFTMAX_AUDITED_GEOMETRY:
        criteria["mae_within_frozen_bound"] = rep.mean_abs_err <= SOFTMAX_MAE_BOUND
    return RunReport(
        command="softmax-fidelity",
        config={"length": length, "rows": rows, "scale_exp": scale_exp},
        seed=seed,
        metrics=metrics,
        criteria=criteria,
    )


def _layernorm_case(channels: int, rows: int, seed: int):
    """Deterministic fidelity scenario: mixed-spread channels through PTF."""
    rng = oracle.rng_from_seed(seed)
    spread = np.exp2(np.arange(channels, dtype=np.float64) % 4)
    x = (rng.standard_normal((rows, channels)) + 0.3) * spread
    params = calib.calibrate_ptf(x)
    xq = calib.quantize(x, params)
    x_deq = calib.dequantize(xq, params)
    gamma = rng.uniform(0.5, 1.5, size=channels)
    beta = rng.normal(0.0, 0.1, size=channels)
    affine = AffineParams.from_real(gamma, beta, out_scale=1.0)
    ref = oracle.layernorm_ref(x_deq, affine.gamma_real, affine.beta_real)
    out_scale = float(np.max(np.abs(ref))) / 126.0
    affine = AffineParams.from_real(gamma, beta, out_scale=out_scale)
    ref = oracle.layernorm_ref(x_deq, affine.gamma_real, affine.beta_real)
    return params, xq, affine, ref


def cmd_layernorm_fidelity(
    channels: int = 768, rows: int = 16, seed: int = DEFAULT_SEED
) -> RunReport:
    """Integer layernorm versus the float oracle on PTF-calibrated channels.

    Channels carry a x1/x2/x4/x8 spread pattern so the power-of-two exponents
    actually engage.  Both sides see the same dequantized inputs and the same
    dequantized affine weights; the metric is kernel arithmetic error plus the
    8-bit output grid.
    """
    params, xq, affine, ref = _layernorm_case(channels, rows, seed)
    approx = ailayernorm_real(xq, params.zp, params.alphas, affine)
    rep = oracle.compare(approx, ref)
    metrics = _report_metrics(rep)
    criteria = {"mae_within_frozen_bound": rep.mean_abs_err <= LAYERNORM_MAE_BOUND}
    return RunReport(
        command="layernorm-fidelity",
        config={"channels": channels, "rows": rows},
        seed=seed,
        metrics=metrics,
        criteria=criteria,
    )


def cmd_attn_proxy(
    seq: int = 64, dim: int = 32, seed: int = DEFAULT_SEED
) -> RunReport:
    """Single-head attention with the integer softmax in the middle.

    Scores are scaled dot products of Gaussian Q/K; the kernel's weights
    multiply the same V as the oracle's, and the verdict is the mean per-row
    cosine similarity of the two attention outputs (end to end, input
    quantization included).
    """
    rng = oracle.rng_from_seed(seed)
    qm = rng.standard_normal((seq, dim))
    km = rng.standard_normal((seq, dim))
    vm = rng.standard_normal((seq, dim))
    scores = qm @ km.T / math.sqrt(dim)
    f = calib.calibrate_pow2(scores)
    q = np.floor(scores * 2.0**f + 0.5).astype(np.int64)
    weights = e2softmax_real(q, SoftmaxConfig(input_scale_exp=f))
    out = weights @ vm
    ref = oracle.softmax_ref(scores) @ vm
    dots = np.sum(out * ref, axis=1)
    norms = np.linalg.norm(out, axis=1) * np.linalg.norm(ref, axis=1)
    cos = dots / np.maximum(norms, 1e-300)
    metrics = {
        "cosine_mean": float(np.mean(cos)),
        "cosine_min": float(np.min(cos)),
        "scale_exp": f,
    }
    criteria = {"mean_cosine_above_min": metrics["cosine_mean"] >= ATTN_COSINE_MIN}
    return RunReport(
        command="attn-proxy",
        config={"seq": seq, "dim": dim},
        seed=seed,
        metrics=metrics,
        criteria=criteria,
    )


def cmd_cycles(
    kind: str = "softmax",
    length: int = 785,
    rows: int = 16,
    lanes: int = 32,
    seed: int = DEFAULT_SEED,
) -> RunReport:
    """Cycle counts for a batch, with and without ping-pong overlap."""
    count = {"softmax": pipemodel.cycles_softmax, "layernorm": pipemodel.cycles_layernorm}
    if kind not in count:
        raise ValueError(f"unknown pipeline kind {kind!r}")
    pp = pipemodel.PipeConfig(vector_lanes=lanes, pingpong=True)
    serial = pipemodel.PipeConfig(vector_lanes=lanes, pingpong=False)
    metrics = {
        "cycles_pingpong": count[kind](length, rows, pp),
        "cycles_serial": count[kind](length, rows, serial),
        "beats_per_row": pp.beats(length),
    }
    criteria = {
        "pingpong_no_slower_than_serial": metrics["cycles_pingpong"]
        <= metrics["cycles_serial"]
    }
    # The stage latencies are model assumptions, not published numbers; every
    # report spells them out.
    config = {
        "kind": kind,
        "length": length,
        "rows": rows,
        "lanes": lanes,
        "stage1_lat": pp.stage1_lat,
        "stage2_lat": pp.stage2_lat,
        "preprocess_lat": pp.preprocess_lat,
    }
    return RunReport(
        command="cycles",
        config=config,
        seed=seed,
        metrics=metrics,
        criteria=criteria,
    )


# --- CLI -------------------------------------------------------------------


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else DEFAULT_SEED


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sole",
        description="Verification harness for the integer softmax/layernorm kernels.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, n=None):
        sp.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV_VAR} or {DEFAULT_SEED})")
        sp.add_argument("--format", choices=["json", "csv", "text"], default="text")
        sp.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
        if n is not None:
            sp.add_argument("--n", type=int, default=n, help="sample count")

    sp = sub.add_parser("bias-check", help="Monte-Carlo divider bias before/after correction")
    common(sp, n=1_000_000)

    sp = sub.add_parser("compress-err", help="square-compression error on E(x^2) and sigma")
    common(sp, n=1 << 20)
    sp.add_argument("--dist", choices=["uniform", "normal"], default="uniform")

    sp = sub.add_parser("softmax-fidelity", help="integer softmax vs float oracle")
    common(sp)
    sp.add_argument("--len", type=int, default=785, dest="length")
    sp.add_argument("--rows", type=int, default=16)
    sp.add_argument("--scale-exp", type=int, default=4)

    sp = sub.add_parser("layernorm-fidelity", help="integer layernorm vs float oracle")
    common(sp)
    sp.add_argument("--channels", type=int, default=768)
    sp.add_argument("--rows", type=int, default=16)

    sp = sub.add_parser("attn-proxy", help="attention cosine fidelity with the integer softmax")
    common(sp)
    sp.add_argument("--len", type=int, default=64, dest="seq", help="sequence length")
    sp.add_argument("--dim", type=int, default=32, help="head dimension")

    sp = sub.add_parser("cycles", help="pipeline cycle counts")
    common(sp)
    sp.add_argument("--kind", choices=["softmax", "layernorm"], default="softmax")
    sp.add_argument("--len", type=int, default=785, dest="length")
    sp.add_argument("--rows", type=int, default=16)
    sp.add_argument("--lanes", type=int, default=32)

    sp = sub.add_parser("calibrate", help="fit power-of-two-factor params from a tensor file")
    sp.add_argument("--input", type=Path, required=True, help="tensor file, channels on the last axis")
    sp.add_argument("--bits", type=int, default=8)
    sp.add_argument("--alpha-max", type=int, default=3)
    sp.add_argument("--out", type=Path, default=None, help="write the params JSON here")
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "calibrate":
        arr = tensorio.load_tensor(args.input)
        if arr.ndim < 2:
            raise SystemExit("calibrate: tensor must have at least 2 dims (…, channels)")
        params = calib.calibrate_ptf(arr, bits=args.bits, alpha_max=args.alpha_max)
        _emit(params.to_json(), args.out)
        return EXIT_PASS

    seed = args.seed if args.seed is not None else _default_seed()
    if args.command == "bias-check":
        report = cmd_bias_check(n=args.n, seed=seed)
    elif args.command == "compress-err":
        report = cmd_compress_err(n=args.n, seed=seed, dist=args.dist)
    elif args.command == "softmax-fidelity":
        report = cmd_softmax_fidelity(
            length=args.length, rows=args.rows, seed=seed, scale_exp=args.scale_exp
        )
    elif args.command == "layernorm-fidelity":
        report = cmd_layernorm_fidelity(channels=args.channels, rows=args.rows, seed=seed)
    elif args.command == "attn-proxy":
        report = cmd_attn_proxy(seq=args.seq, dim=args.dim, seed=seed)
    elif args.command == "cycles":
        report = cmd_cycles(
            kind=args.kind, length=args.length, rows=args.rows, lanes=args.lanes, seed=seed
        )
    else:  # pragma: no cover - argparse enforces the choices
        raise SystemExit(f"unknown command {args.command!r}")

    _emit(report.render(args.format), args.out)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
