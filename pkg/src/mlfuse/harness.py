"""Verification and measurement of generated programs against the runtime.

Verification drives both deployments with the same seeded random inputs and
reports the worst l2 distance over all of them. Benchmarking times repeated
invokes on both sides and collects the phase-tagged allocation counters.
"""

from __future__ import annotations

import gc
import json
import statistics
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import interpreter
from .graphir import DataType, ModelBundle
from .kernels import DeviceInfo


class HarnessError(Exception):
    pass


@dataclass(frozen=True)
class VerifyConfig:
    delta: float = 1e-6
    n_inputs: int = 100
    seed: int = 4242424242424242
    input_low: float = -1.0
    input_high: float = 1.0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.n_inputs < 1:
            raise ValueError("n_inputs must be >= 1")
        if not self.input_low < self.input_high:
            raise ValueError("input range is empty")


def make_inputs(graph, cfg: VerifyConfig) -> list[list[np.ndarray]]:
    """Seeded uniform random inputs: n_inputs samples of all graph inputs."""
    rng = np.random.default_rng(cfg.seed)
    specs = []
    for tid in graph.inputs:
        t = graph.tensors[tid]
        if t.dtype is not DataType.F32:
            raise HarnessError(f"graph input {tid} is {t.dtype.name}; random "
                              "input generation covers F32 only")
        specs.append(t.shape)
    out = []
    for _ in range(cfg.n_inputs):
        out.append([rng.uniform(cfg.input_low, cfg.input_high,
                                size=s).astype(np.float32) for s in specs])
    return out


def flatten_outputs(arrays) -> np.ndarray:
    return np.concatenate([np.asarray(a).reshape(-1).astype(np.float64)
                           for a in arrays])


def output_distance(a, b) -> float:
    """l2 distance between two output sets, accumulated in float64."""
    fa, fb = flatten_outputs(a), flatten_outputs(b)
    if fa.shape != fb.shape:
        raise HarnessError(f"output element counts differ: {fa.size} vs {fb.size}")
    return float(np.linalg.norm(fa - fb))


@dataclass
class DiffReport:
    delta: float
    n_inputs: int
    seed: int
    max_error: float
    max_abs_error: float
    per_input: list[float]
    passed: bool

    def to_json(self) -> str:
        return json.dumps({
            "delta": self.delta,
            "n_inputs": self.n_inputs,
            "seed": self.seed,
            "max_error": self.max_error,
            "max_abs_error": self.max_abs_error,
            "per_input": self.per_input,
            "passed": self.passed,
        }, sort_keys=True, separators=(",", ":"))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def _run_program(executable, in_path, out_path, extra=(), timeout=600) -> None:
    cmd = [str(executable), str(in_path), str(out_path), *extra]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        raise HarnessError(f"generated program failed (rc={proc.returncode}): "
                           f"{proc.stderr.strip()}")


def _write_samples(path, samples) -> None:
    flat = np.concatenate([a.reshape(-1) for sample in samples for a in sample])
    flat.astype("<f4").tofile(path)


def _device_for(artifact) -> DeviceInfo:
    threads = artifact.manifest.get("device", {}).get("threads", 1)
    return DeviceInfo(threads=threads)


def verify(bundle: ModelBundle, artifact, cfg: VerifyConfig | None = None,
           registry=None) -> DiffReport:
    """Compare the generated program against the runtime on random inputs."""
    cfg = cfg or VerifyConfig()
    device = _device_for(artifact)
    plan = interpreter.load(bundle, device=device, registry=registry)
    xs = make_inputs(bundle.graph, cfg)
    oracle = [interpreter.invoke(plan, x) for x in xs]

    out_counts = []
    for tid in bundle.graph.outputs:
        n = 1
        for d in plan.shapes[tid]:
            n *= d
        out_counts.append(n)
    per_sample = sum(out_counts)

    with tempfile.TemporaryDirectory(prefix="mlfuse-verify-") as td:
        in_path = Path(td) / "in.raw"
        out_path = Path(td) / "out.raw"
        _write_samples(in_path, xs)
        _run_program(artifact.executable, in_path, out_path)
        got = np.fromfile(out_path, dtype="<f4").astype(np.float32)
    if got.size != per_sample * len(xs):
        raise HarnessError(f"program wrote {got.size} values, expected "
                           f"{per_sample * len(xs)}")

    per_input = []
    max_abs = 0.0
    for i, outs in enumerate(oracle):
        chunk = got[i * per_sample:(i + 1) * per_sample]
        pieces = []
        at = 0
        for n in out_counts:
            pieces.append(chunk[at:at + n])
            at += n
        per_input.append(output_distance(outs, pieces))
        d = np.abs(flatten_outputs(outs) - flatten_outputs(pieces))
        if d.size:
            max_abs = max(max_abs, float(d.max()))
    max_error = max(per_input)
    return DiffReport(
        delta=cfg.delta, n_inputs=cfg.n_inputs, seed=cfg.seed,
        max_error=max_error, max_abs_error=max_abs,
        per_input=per_input, passed=max_error <= cfg.delta)


def _latency_stats(ns_list) -> dict:
    ms = [t / 1e6 for t in ns_list]
    return {
        "mean_ms": statistics.fmean(ms),
        "median_ms": statistics.median(ms),
        "min_ms": min(ms),
        "max_ms": max(ms),
    }


def check_latency_stats(stats: dict) -> None:
    if not (stats["min_ms"] <= stats["median_ms"] <= stats["max_ms"]
            and stats["min_ms"] <= stats["mean_ms"] <= stats["max_ms"]):
        raise HarnessError(f"inconsistent latency stats: {stats}")


@dataclass
class BenchReport:
    repetitions: int
    interpreter_latency: dict
    generated_latency: dict
    interpreter_counters: dict
    generated_counters: dict
    latency_change_pct: float
    peak_change_pct: float
    per_rep_ns: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "repetitions": self.repetitions,
            "interpreter_latency": self.interpreter_latency,
            "generated_latency": self.generated_latency,
            "interpreter_counters": self.interpreter_counters,
            "generated_counters": self.generated_counters,
            "latency_change_pct": self.latency_change_pct,
            "peak_change_pct": self.peak_change_pct,
        }, sort_keys=True, separators=(",", ":"))


def bench(bundle: ModelBundle, artifact, repetitions: int = 1000,
          cfg: VerifyConfig | None = None, registry=None,
          keep_per_rep: bool = False) -> BenchReport:
    """Time repeated single-sample invokes on both deployments."""
    if repetitions < 1:
        raise HarnessError("repetitions must be >= 1")
    cfg = cfg or VerifyConfig()
    device = _device_for(artifact)
    sample = make_inputs(bundle.graph,
                         VerifyConfig(seed=cfg.seed, n_inputs=1))[0]

    plan = interpreter.load(bundle, device=device, registry=registry)
    interpreter.invoke(plan, sample)  # warmup
    interp_ns = []
    # same collector discipline as the generated program's timing loop
    gc.disable()
    try:
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            interpreter.invoke(plan, sample)
            interp_ns.append(time.perf_counter_ns() - t0)
    finally:
        gc.enable()
    ic = interpreter.counters(plan)
    interp_counters = {
        "load_bytes": ic.load_bytes, "configure_bytes": ic.configure_bytes,
        "invoke_bytes": ic.invoke_bytes, "peak_bytes": ic.peak_bytes,
    }

    with tempfile.TemporaryDirectory(prefix="mlfuse-bench-") as td:
        in_path = Path(td) / "in.raw"
        out_path = Path(td) / "out.raw"
        stats_path = Path(td) / "stats.json"
        _write_samples(in_path, [sample])
        _run_program(artifact.executable, in_path, out_path,
                     extra=("--reps", str(repetitions), "--stats", str(stats_path)))
        stats = json.loads(stats_path.read_text(encoding="utf-8"))
    gen_ns = stats["invoke_ns"]
    if len(gen_ns) != repetitions:
        raise HarnessError(f"program timed {len(gen_ns)} reps, expected "
                           f"{repetitions}")
    gen_counters = {k: stats[k] for k in
                    ("load_bytes", "configure_bytes", "invoke_bytes", "peak_bytes")}

    interp_stats = _latency_stats(interp_ns)
    gen_stats = _latency_stats(gen_ns)
    check_latency_stats(interp_stats)
    check_latency_stats(gen_stats)

    report = BenchReport(
        repetitions=repetitions,
        interpreter_latency=interp_stats,
        generated_latency=gen_stats,
        interpreter_counters=interp_counters,
        generated_counters=gen_counters,
        latency_change_pct=100.0 * (interp_stats["mean_ms"] - gen_stats["mean_ms"])
        / interp_stats["mean_ms"],
        peak_change_pct=100.0 * (interp_counters["peak_bytes"]
                                 - gen_counters["peak_bytes"])
        / max(1, interp_counters["peak_bytes"]),
    )
    if keep_per_rep:
        report.per_rep_ns = {"interpreter": interp_ns, "generated": gen_ns}
    return report
