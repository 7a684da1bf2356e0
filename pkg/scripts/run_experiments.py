#!/usr/bin/env python3
"""Build every fixture, compile it, verify, benchmark, and sniff.

Produces the full comparison table on one machine: translation error,
latency and peak-memory change, and detectability of both deployments.
Slow (1000 timed repetitions per fixture); meant for a desk run, not CI.
"""

import argparse
import shutil
import sys
import tempfile
from pathlib import Path

from mlfuse import codegen, fixtures, graphir, harness, sniffer


def run_one(name, workdir, reps):
    bundle = fixtures.build_fixture(name)
    deploy = workdir / name / "baseline"
    deploy.mkdir(parents=True)
    graphir.save_bundle(bundle, deploy / f"{name}.mlg", deploy / f"{name}.mlw")

    artifact = codegen.pipeline(bundle, workdir / name / "build")
    diff = harness.verify(bundle, artifact)
    bench = harness.bench(bundle, artifact, repetitions=reps)

    shipped = workdir / name / "shipped"
    shipped.mkdir(parents=True)
    shutil.copy(artifact.executable, shipped / "program")
    base_hits = len(sniffer.scan(deploy).findings)
    gen_hits = len(sniffer.scan(shipped).findings)

    return {
        "fixture": name,
        "max_error": diff.max_error,
        "passed": diff.passed,
        "interp_ms": bench.interpreter_latency["mean_ms"],
        "gen_ms": bench.generated_latency["mean_ms"],
        "latency_change_pct": bench.latency_change_pct,
        "interp_peak": bench.interpreter_counters["peak_bytes"],
        "gen_peak": bench.generated_counters["peak_bytes"],
        "peak_change_pct": bench.peak_change_pct,
        "baseline_findings": base_hits,
        "generated_findings": gen_hits,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--keep", action="store_true",
                    help="leave the work directory behind")
    ap.add_argument("fixtures", nargs="*",
                    default=sorted(fixtures.FIXTURES))
    args = ap.parse_args()

    tmp = Path(tempfile.mkdtemp(prefix="mlfuse-exp-"))
    rows = []
    try:
        for name in args.fixtures:
            print(f"[{name}] building, compiling, measuring ...",
                  file=sys.stderr)
            rows.append(run_one(name, tmp, args.reps))
    finally:
        if args.keep:
            print(f"work directory kept at {tmp}", file=sys.stderr)
        else:
            shutil.rmtree(tmp, ignore_errors=True)

    header = (f"{'fixture':<10} {'max_err':>9} {'interp ms':>10} "
              f"{'gen ms':>10} {'lat %':>7} {'interp peak':>12} "
              f"{'gen peak':>10} {'mem %':>7} {'base hits':>10} "
              f"{'gen hits':>9}")
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r['fixture']:<10} {r['max_error']:>9.2e} "
              f"{r['interp_ms']:>10.4f} {r['gen_ms']:>10.4f} "
              f"{r['latency_change_pct']:>+7.1f} {r['interp_peak']:>12} "
              f"{r['gen_peak']:>10} {r['peak_change_pct']:>+7.1f} "
              f"{r['baseline_findings']:>10} {r['generated_findings']:>9}")
    bad = [r for r in rows if not r["passed"] or r["generated_findings"]]
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
