"""Command line front end for the whole toolchain.

Exit code contract: 0 success (or clean scan), 1 domain failure (failed
verification, scan findings, exhausted status search), 2 usage or
environment error (bad files, unknown toolchain, malformed models).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import codegen, fixtures, graphir, harness, interpreter, sniffer
from .kernels import (
    DeviceInfo,
    ParamError,
    PrepareError,
    RegistryError,
    StatusError,
    default_registry,
)


def _load(graph_path, weights_path) -> graphir.ModelBundle:
    rules = default_registry().custom_shape_rules()
    return graphir.load_bundle(graph_path, weights_path, custom_rules=rules)


def cmd_build_fixture(args) -> int:
    bundle = fixtures.build_fixture(args.name, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gp = out / f"{args.name}.mlg"
    wp = out / f"{args.name}.mlw"
    graphir.save_bundle(bundle, gp, wp)
    if args.json:
        print(json.dumps({"name": args.name, "graph": str(gp),
                          "weights": str(wp)}, sort_keys=True))
    else:
        print(f"wrote {gp} and {wp}")
    return 0


def cmd_inspect(args) -> int:
    bundle = _load(args.graph, args.weights)
    info = graphir.summarize(bundle)
    if args.json:
        print(json.dumps(info, sort_keys=True))
        return 0
    print(f"tensors: {info['tensor_count']}  "
          f"operators: {len(info['operators'])}  "
          f"weight entries: {len(info['weights'])}")
    for op in info["operators"]:
        print(f"  [{op['index']}] {op['op']}  "
              f"in={op['input_shapes']} out={op['output_shapes']}")
    return 0


def cmd_run(args) -> int:
    bundle = _load(args.graph, args.weights)
    plan = interpreter.load(bundle, device=DeviceInfo(threads=args.threads))
    graph = bundle.graph
    shapes = plan.shapes
    counts = []
    for tid in graph.inputs:
        n = 1
        for d in shapes[tid]:
            n *= d
        counts.append(n)
    flat = np.fromfile(args.input, dtype="<f4").astype(np.float32)
    if flat.size != sum(counts):
        raise ValueError(f"input file holds {flat.size} values, the model "
                         f"takes {sum(counts)}")
    xs = []
    at = 0
    for n, tid in zip(counts, graph.inputs):
        xs.append(flat[at:at + n].reshape(shapes[tid]))
        at += n
    outs = interpreter.invoke(plan, xs)
    merged = np.concatenate([o.reshape(-1) for o in outs]).astype("<f4")
    merged.tofile(args.output)
    c = interpreter.counters(plan)
    if args.json:
        print(json.dumps({
            "output": args.output, "values": int(merged.size),
            "load_bytes": c.load_bytes, "configure_bytes": c.configure_bytes,
            "invoke_bytes": c.invoke_bytes, "peak_bytes": c.peak_bytes,
        }, sort_keys=True))
    else:
        print(f"wrote {merged.size} values to {args.output}")
    return 0


def _toolchain_from_args(args) -> codegen.ToolchainConfig:
    if args.toolchain:
        obj = json.loads(Path(args.toolchain).read_text(encoding="utf-8"))
        tc = codegen.ToolchainConfig.from_obj(obj)
    else:
        tc = codegen.ToolchainConfig()
    if args.strip is not None:
        tc = dataclasses.replace(tc, strip=args.strip)
    return tc


def cmd_codegen(args) -> int:
    bundle = _load(args.graph, args.weights)
    kw = {}
    if args.delta is not None:
        kw["delta"] = args.delta
    if args.seed is not None:
        kw["seed"] = args.seed
    artifact = codegen.pipeline(
        bundle, args.out, device=DeviceInfo(threads=args.threads),
        cfg=harness.VerifyConfig(**kw), toolchain=_toolchain_from_args(args))
    if args.json:
        print(json.dumps(artifact.manifest, sort_keys=True))
    else:
        m = artifact.manifest
        print(f"built {artifact.executable}")
        print(f"candidates evaluated: {m['candidates_evaluated']}  "
              f"search max diff: {m['max_diff']!r}")
        print(f"plan digest: {artifact.plan_digest}")
    return 0


def cmd_verify(args) -> int:
    bundle = _load(args.graph, args.weights)
    artifact = codegen.load_artifact(args.artifact)
    m = artifact.manifest
    cfg = harness.VerifyConfig(delta=m["delta"], n_inputs=m["n_inputs"],
                               seed=m["seed"])
    report = harness.verify(bundle, artifact, cfg)
    if args.json:
        print(report.to_json())
    else:
        word = "PASS" if report.passed else "FAIL"
        print(f"verify {word}: max_error={report.max_error!r} "
              f"delta={report.delta!r} over {report.n_inputs} inputs")
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    bundle = _load(args.graph, args.weights)
    artifact = codegen.load_artifact(args.artifact)
    report = harness.bench(bundle, artifact, repetitions=args.reps)
    if args.json:
        print(report.to_json())
        return 0
    ik = report.interpreter_counters
    gk = report.generated_counters
    print(f"repetitions: {report.repetitions}")
    print(f"interpreter mean invoke: "
          f"{report.interpreter_latency['mean_ms']:.4f} ms  "
          f"peak {ik['peak_bytes']} bytes")
    print(f"generated   mean invoke: "
          f"{report.generated_latency['mean_ms']:.4f} ms  "
          f"peak {gk['peak_bytes']} bytes")
    print(f"latency change: {report.latency_change_pct:+.1f}%  "
          f"peak change: {report.peak_change_pct:+.1f}%")
    return 0


def cmd_sniff(args) -> int:
    sigs = None
    if args.sigs:
        sigs = sniffer.SignatureSet.from_json(
            Path(args.sigs).read_text(encoding="utf-8"))
    if args.strings:
        report = sniffer.scan_binary_strings(args.target, sigs)
    else:
        report = sniffer.scan(args.target, sigs)
    if args.json:
        report.write(args.json)
    n = len(report.findings)
    print(f"{n} finding(s) in {report.target} "
          f"({report.scanned_files} file(s) scanned)")
    for f in report.findings:
        where = "name" if f.offset is None else f"offset {f.offset}"
        print(f"  {f.path}: {f.kind} {f.token!r} ({where})")
    return 1 if report.findings else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlfuse",
        description="run, compile, verify, benchmark, and sniff on-device "
                    "model deployments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-fixture", help="construct a seeded test model")
    p.add_argument("name", choices=sorted(fixtures.FIXTURES))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_build_fixture)

    p = sub.add_parser("inspect", help="summarize a model bundle")
    p.add_argument("graph")
    p.add_argument("weights")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("run", help="run one input through the interpreter")
    p.add_argument("graph")
    p.add_argument("weights")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("codegen",
                       help="compile a bundle into a standalone program")
    p.add_argument("graph")
    p.add_argument("weights")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--toolchain", default=None,
                   help="JSON file: {command, flags[], strip_flags[]}")
    p.add_argument("--strip", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_codegen)

    p = sub.add_parser("verify",
                       help="compare a generated program against the runtime")
    p.add_argument("graph")
    p.add_argument("weights")
    p.add_argument("artifact", help="codegen output directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="time both deployments and report")
    p.add_argument("graph")
    p.add_argument("weights")
    p.add_argument("artifact", help="codegen output directory")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("sniff", help="scan a target for DL components")
    p.add_argument("target")
    p.add_argument("--sigs", default=None,
                   help="JSON file overriding the signature set")
    p.add_argument("--strings", action="store_true",
                   help="match only against printable strings")
    p.add_argument("--json", default=None, metavar="OUT",
                   help="also write the report to this path")
    p.set_defaults(fn=cmd_sniff)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except codegen.SearchError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (harness.HarnessError, interpreter.InterpreterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (graphir.GraphError, RegistryError, StatusError, ParamError,
            PrepareError, codegen.CodegenError, sniffer.SnifferError,
            OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
