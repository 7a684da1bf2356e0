"""Compile a model bundle into a self-contained executable program.

The pipeline extracts one computing unit per operator, resolves known
configuration from the container, searches the unknown settings by comparing
candidate behavior against the runtime, and then emits a program that embeds
the weight payloads and only the kernel templates the model needs. The
emitted program carries no model container, no parser, and no registry; its
only file access at inference time is the input tensor argument.

Search never reads the configuration table shipped with the runtime; it
recovers workable settings purely from observed behavior.
"""

from __future__ import annotations

import hashlib
import inspect
import itertools
import json
import math
import os
import shutil
import stat
import subprocess
import sys
import tempfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import graphir, harness, interpreter
from .graphir import GraphError, DataType, ModelBundle
from .kernels import (
    DeviceInfo,
    ParamError,
    PrepareError,
    RegistryError,
    StatusAssignment,
    StatusError,
    check_unit_params,
    class_signature,
    default_registry,
    layout_weight_arrays,
    validate_status,
)
from .kernels import ops as kernel_ops


class CodegenError(Exception):
    pass


class SearchError(CodegenError):
    def __init__(self, msg, candidates_evaluated=0, best_error=math.inf):
        super().__init__(msg)
        self.candidates_evaluated = candidates_evaluated
        self.best_error = best_error


class ToolchainError(CodegenError):
    pass


class CompileError(CodegenError):
    pass


@dataclass(frozen=True)
class ToolchainConfig:
    command: str = sys.executable
    flags: tuple[str, ...] = ()
    strip_flags: tuple[str, ...] = ("-OO",)
    strip: bool = True

    @classmethod
    def from_obj(cls, obj: dict) -> "ToolchainConfig":
        known = {"command", "flags", "strip_flags", "strip"}
        extra = set(obj) - known
        if extra:
            raise CodegenError(f"unknown toolchain field(s) {sorted(extra)}")
        kw = dict(obj)
        for key in ("flags", "strip_flags"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass
class ExtractionResult:
    device: DeviceInfo
    units: list  # one ComputingUnit per operator, in graph order


@dataclass
class OpConfig:
    op_index: int
    kind: str
    unit: object
    params: object
    act_ids: tuple[int, ...]
    weight_keys: tuple[int, ...]
    output_ids: tuple[int, ...]


@dataclass(frozen=True)
class ConfigurationClass:
    """Operators sharing a unit, option signature, and data kind.

    All members carry the same unknown settings, so one choice covers the
    whole class and the joint search space shrinks accordingly.
    """
    key: tuple
    fields: tuple
    members: tuple[int, ...]

    def candidates(self):
        return itertools.product(*(f.domain for f in self.fields))


@dataclass
class SearchResult:
    assignment: StatusAssignment
    candidates_evaluated: int
    max_error: float


@dataclass
class EmissionStep:
    op_index: int
    template_id: str
    kwargs: dict
    act_ids: tuple[int, ...]
    output_ids: tuple[int, ...]
    weight_names: tuple[str, ...]


@dataclass
class EmissionPlan:
    """Everything the emitter needs, already cut loose from the container."""
    steps: list[EmissionStep]
    weights: dict  # name -> flat array, laid out per the accepted status
    buffers: dict  # tensor id -> (element count, dtype name)
    input_ids: tuple[int, ...]
    input_shapes: tuple
    output_ids: tuple[int, ...]
    output_shapes: tuple
    threads: int


@dataclass
class GeneratedArtifact:
    out_dir: str
    sources: list[str]  # relative to out_dir
    executable: str  # absolute path
    manifest: dict
    plan_digest: str

    @property
    def manifest_path(self) -> str:
        return str(Path(self.out_dir) / "build_manifest.json")


def load_artifact(out_dir) -> GeneratedArtifact:
    path = Path(out_dir) / "build_manifest.json"
    if not path.is_file():
        raise CodegenError(f"no build manifest under {out_dir}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    return GeneratedArtifact(
        out_dir=str(out_dir), sources=list(manifest["sources"]),
        executable=str(Path(out_dir) / manifest["executable"]),
        manifest=manifest, plan_digest=manifest["plan_digest"])


# ---------------------------------------------------------------------------
# Extraction and analysis


def extract_units(graph, device: DeviceInfo | None = None,
                  registry=None) -> ExtractionResult:
    """Pick one computing unit per operator for the target device."""
    device = device or DeviceInfo()
    registry = registry or default_registry()
    units = []
    for i, node in enumerate(graph.operators):
        try:
            dtype = graph.tensors[node.inputs[0]].dtype
            units.append(registry.lookup(node.op_id, dtype, device))
        except RegistryError as e:
            raise RegistryError(f"operator {i}: {e}") from None
    return ExtractionResult(device=device, units=units)


def analyze_config(graph, extraction: ExtractionResult,
                   registry=None) -> list[OpConfig]:
    """Resolve knowns for every operator and cross-check unit shape math."""
    registry = registry or default_registry()
    shapes = graphir.infer_shapes(graph, custom_rules=registry.custom_shape_rules())
    weight_ids = {t.id: t.weight_ref for t in graph.tensors
                  if t.weight_ref is not None}
    configs = []
    for i, (node, unit) in enumerate(zip(graph.operators, extraction.units)):
        try:
            params = registry.map_options_to_params(node, shapes,
                                                    weight_ids=weight_ids)
            if unit.key.variant == "tiled":
                params.values["threads"] = extraction.device.threads
            check_unit_params(unit, params)
            computed = registry.prepare(unit, params,
                                        [shapes[t] for t in node.inputs])
            declared = [tuple(shapes[t]) for t in node.outputs]
            if [tuple(s) for s in computed] != declared:
                raise PrepareError(f"unit shapes {computed} contradict graph "
                                   f"shapes {declared}")
            act_ids = tuple(t for t in node.inputs if t not in weight_ids)
            if not act_ids:
                raise ParamError("every operator needs at least one "
                                 "non-constant input")
            configs.append(OpConfig(
                op_index=i, kind=params.op_kind, unit=unit, params=params,
                act_ids=act_ids,
                weight_keys=tuple(weight_ids[t] for t in node.inputs
                                  if t in weight_ids),
                output_ids=tuple(node.outputs)))
        except (ParamError, PrepareError, StatusError, GraphError) as e:
            raise type(e)(f"operator {i}: {e}") from None
    return configs


# ---------------------------------------------------------------------------
# Status search


def build_classes(configs) -> list[ConfigurationClass]:
    groups: dict = {}
    for c in configs:
        schema = c.unit.status_schema
        if not schema:
            continue
        sig = class_signature(c.params)
        seen_kinds = []
        for f in schema:
            if f.data_kind not in seen_kinds:
                seen_kinds.append(f.data_kind)
        for dk in seen_kinds:
            fields = tuple(f for f in schema if f.data_kind == dk)
            key = (c.kind, c.unit.key.dtype.name, c.unit.key.variant, sig, dk)
            entry = groups.setdefault(key, (fields, []))
            entry[1].append(c.op_index)
    return [ConfigurationClass(key=key, fields=fields,
                               members=tuple(sorted(members)))
            for key, (fields, members) in sorted(groups.items())]


def _statuses_for(joint, classes, n_ops) -> list[dict]:
    per_op: list[dict] = [{} for _ in range(n_ops)]
    for cls, values in zip(classes, joint):
        for f, v in zip(cls.fields, values):
            for op_i in cls.members:
                if f.name in per_op[op_i]:
                    raise CodegenError(
                        f"status '{f.name}' assigned twice for operator {op_i}")
                per_op[op_i][f.name] = v
    return per_op


def search_status(bundle: ModelBundle, extraction: ExtractionResult, configs,
                  cfg: harness.VerifyConfig | None = None,
                  registry=None) -> SearchResult:
    """Find status values whose behavior matches the runtime within delta.

    Candidates are joint assignments over the configuration classes,
    enumerated in declared domain order. A candidate is rejected on the
    first input whose l2 distance from the runtime exceeds delta; the
    accepted candidate is evaluated on every input.
    """
    cfg = cfg or harness.VerifyConfig()
    registry = registry or default_registry()
    graph = bundle.graph
    classes = build_classes(configs)

    plan = interpreter.load(bundle, device=extraction.device, registry=registry)
    xs = harness.make_inputs(graph, cfg)
    oracle_flat = [harness.flatten_outputs(interpreter.invoke(plan, x))
                   for x in xs]

    shapes = plan.shapes
    weight_ids = {t.id for t in graph.tensors if t.weight_ref is not None}
    canonical = {key: bundle.weights.as_array(key)
                 for key in bundle.weights.entries}
    buffers = {}
    for t in graph.tensors:
        if t.id in weight_ids:
            continue
        count = 1
        for d in shapes[t.id]:
            count *= d
        buffers[t.id] = np.empty(count, dtype=t.dtype.np_dtype)
    input_bufs = [buffers[t] for t in graph.inputs]
    exec_ins = {c.op_index: [buffers[t] for t in c.act_ids] for c in configs}
    exec_outs = {c.op_index: [buffers[t] for t in c.output_ids] for c in configs}

    if classes:
        space = itertools.product(*(list(cls.candidates()) for cls in classes))
    else:
        space = iter([()])

    evaluated = 0
    best = math.inf
    for joint in space:
        evaluated += 1
        per_op = _statuses_for(joint, classes, len(configs))
        try:
            calls = []
            for c in configs:
                st = per_op[c.op_index]
                arg_kwargs = validate_status(c.unit, c.params, st)
                flats, _ = layout_weight_arrays(
                    c.params, st, [canonical[k] for k in c.weight_keys])
                calls.append((c.unit.fn, exec_ins[c.op_index], flats,
                              exec_outs[c.op_index],
                              {**c.params.values, **arg_kwargs}))
        except StatusError:
            continue  # the unit itself rejects this combination
        worst = 0.0
        ok = True
        for x, ref in zip(xs, oracle_flat):
            for buf, arr in zip(input_bufs, x):
                np.copyto(buf, arr.reshape(-1))
            for fn, ins, ws, outs, kw in calls:
                fn(ins, ws, outs, **kw)
            cand = np.concatenate([buffers[t].astype(np.float64)
                                   for t in graph.outputs])
            err = float(np.linalg.norm(cand - ref))
            if not math.isfinite(err):
                ok = False
                worst = math.inf
                break
            if err > worst:
                worst = err
            if worst > cfg.delta:
                ok = False
                break
        if ok and worst <= cfg.delta:
            assignment = StatusAssignment(
                class_choices={
                    cls.key: dict(zip((f.name for f in cls.fields), values))
                    for cls, values in zip(classes, joint)},
                per_op=per_op)
            return SearchResult(assignment=assignment,
                                candidates_evaluated=evaluated,
                                max_error=worst)
        if worst < best:
            best = worst
    raise SearchError(
        f"status search exhausted {evaluated} candidate(s) without meeting "
        f"delta={cfg.delta}; best observed max error {best}",
        candidates_evaluated=evaluated, best_error=best)


# ---------------------------------------------------------------------------
# Emission


def build_emission_plan(bundle: ModelBundle, configs,
                        assignment: StatusAssignment,
                        device: DeviceInfo | None = None,
                        registry=None) -> EmissionPlan:
    device = device or DeviceInfo()
    registry = registry or default_registry()
    graph = bundle.graph
    shapes = graphir.infer_shapes(graph, custom_rules=registry.custom_shape_rules())
    canonical = {key: bundle.weights.as_array(key)
                 for key in bundle.weights.entries}
    steps = []
    weights_out: dict = {}
    for c in configs:
        st = assignment.per_op[c.op_index]
        arg_kwargs = validate_status(c.unit, c.params, st)
        flats, _ = layout_weight_arrays(
            c.params, st, [canonical[k] for k in c.weight_keys])
        names = []
        for slot, arr in enumerate(flats):
            name = f"W{c.op_index}_{slot}"
            weights_out[name] = arr
            names.append(name)
        steps.append(EmissionStep(
            op_index=c.op_index, template_id=c.unit.template_id,
            kwargs={**c.params.values, **arg_kwargs},
            act_ids=c.act_ids, output_ids=c.output_ids,
            weight_names=tuple(names)))
    buffers = {}
    for t in graph.tensors:
        if t.weight_ref is None:
            count = 1
            for d in shapes[t.id]:
                count *= d
            buffers[t.id] = (count, t.dtype.name)
    return EmissionPlan(
        steps=steps, weights=weights_out, buffers=buffers,
        input_ids=tuple(graph.inputs),
        input_shapes=tuple(tuple(shapes[t]) for t in graph.inputs),
        output_ids=tuple(graph.outputs),
        output_shapes=tuple(tuple(shapes[t]) for t in graph.outputs),
        threads=device.threads)


_FORBIDDEN_TOKENS = ("tflite", ".lite", "graph.json", ".params", "MLW0",
                     "org.tensorflow", "libtvm")

_NP_DTYPE_TOKEN = {"F32": "np.float32", "I32": "np.int32"}


def _lit(v) -> str:
    if v is None or isinstance(v, bool):
        return repr(v)
    if isinstance(v, int):
        return repr(v)
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return f'float("{v!r}")'
        return repr(v)
    if isinstance(v, str):
        return repr(v)
    if isinstance(v, tuple):
        inner = ", ".join(_lit(x) for x in v)
        return f"({inner},)" if len(v) == 1 else f"({inner})"
    raise CodegenError(f"cannot render literal for {type(v).__name__}")


def _wrap_args(parts, indent="        ", width=80) -> list[str]:
    lines = []
    cur = ""
    for part in parts:
        piece = part + ","
        joined = piece if not cur else f"{cur} {piece}"
        if cur and len(indent) + len(joined) > width:
            lines.append(indent + cur)
            cur = piece
        else:
            cur = joined
    if cur:
        lines.append(indent + cur)
    return lines


def _weight_order(name: str) -> tuple[int, int]:
    op, slot = name[1:].split("_")
    return int(op), int(slot)


def _emit_weights(plan: EmissionPlan) -> str:
    lines = ["import numpy as np", "", ""]
    if any(arr.dtype == np.float32 for arr in plan.weights.values()):
        lines += ["def _f32(bits):",
                  "    return np.array(bits, dtype=np.uint32).view(np.float32)",
                  "", ""]
    for name in sorted(plan.weights, key=_weight_order):
        arr = plan.weights[name]
        if arr.dtype == np.float32:
            words = [f"0x{w:08x}" for w in arr.view(np.uint32).tolist()]
            lines.append(f"{name} = _f32([")
            for i in range(0, len(words), 6):
                lines.append("    " + ", ".join(words[i:i + 6]) + ",")
            lines.append("])")
        elif arr.dtype == np.int32:
            lines.append(f"{name} = np.array([")
            vals = [str(v) for v in arr.tolist()]
            for i in range(0, len(vals), 10):
                lines.append("    " + ", ".join(vals[i:i + 10]) + ",")
            lines.append("], dtype=np.int32)")
        else:
            raise CodegenError(f"cannot embed weight dtype {arr.dtype}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _emit_driver(plan: EmissionPlan) -> str:
    used_templates = []
    for step in plan.steps:
        if step.template_id not in used_templates:
            used_templates.append(step.template_id)
    helpers = []
    for tid in used_templates:
        for h in kernel_ops.HELPER_DEPS[tid]:
            if h not in helpers:
                helpers.append(h)
    helpers.sort()

    out = ["import numpy as np", ""]
    if plan.weights:
        names = sorted(plan.weights, key=_weight_order)
        out.append("from net_weights import (")
        out.extend(_wrap_args(names, indent="    "))
        out.append(")")
        out.append("")
    out.append("")
    for h in helpers:
        out.append(inspect.getsource(kernel_ops.HELPERS[h]).rstrip("\n"))
        out.append("")
        out.append("")
    for tid in used_templates:
        out.append(inspect.getsource(kernel_ops.KERNELS[tid]).rstrip("\n"))
        out.append("")
        out.append("")

    out.append(f"INPUT_SHAPES = {_lit(plan.input_shapes)}")
    out.append(f"OUTPUT_SHAPES = {_lit(plan.output_shapes)}")
    total = sum(count * 4 for count, _ in plan.buffers.values())
    out.append(f"BUFFER_BYTES = {total}")
    out.append("")
    out.append("")
    out.append("def run(inputs):")
    for tid in sorted(plan.buffers):
        count, dtype_name = plan.buffers[tid]
        out.append(f"    t{tid} = np.empty({count}, "
                   f"dtype={_NP_DTYPE_TOKEN[dtype_name]})")
    for slot, tid in enumerate(plan.input_ids):
        out.append(f"    np.copyto(t{tid}, inputs[{slot}].reshape(-1))")
    for step in plan.steps:
        ins = ", ".join(f"t{t}" for t in step.act_ids)
        ws = ", ".join(step.weight_names)
        outs = ", ".join(f"t{t}" for t in step.output_ids)
        out.append(f"    {step.template_id}(")
        out.append(f"        [{ins}], [{ws}], [{outs}],")
        kw_parts = [f"{k}={_lit(v)}" for k, v in step.kwargs.items()]
        out.extend(_wrap_args(kw_parts))
        out.append("    )")
    rets = ", ".join(f"t{t}" for t in plan.output_ids)
    if len(plan.output_ids) == 1:
        rets += ","
    out.append(f"    return ({rets})")
    return "\n".join(out) + "\n"


_MAIN_SRC = '''\
import gc
import json
import sys
import time

import numpy as np

import net_driver


def _fail(msg):
    sys.stderr.write(msg + "\\n")
    return 2


def main(argv):
    reps = 1
    stats_path = None
    paths = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a == "--reps":
            i += 1
            reps = int(argv[i])
        elif a == "--stats":
            i += 1
            stats_path = argv[i]
        else:
            paths.append(a)
        i += 1
    if len(paths) != 2 or reps < 1:
        return _fail("usage: program IN.raw OUT.raw [--reps N] [--stats FILE]")
    counts = [1 for _ in net_driver.INPUT_SHAPES]
    for j, shape in enumerate(net_driver.INPUT_SHAPES):
        for d in shape:
            counts[j] *= d
    per_sample = sum(counts)
    flat = np.fromfile(paths[0], dtype="<f4").astype(np.float32)
    if flat.size == 0 or flat.size % per_sample != 0:
        return _fail(f"input holds {flat.size} values, "
                     f"need a multiple of {per_sample}")
    samples = []
    for j in range(flat.size // per_sample):
        chunk = flat[j * per_sample:(j + 1) * per_sample]
        fields = []
        at = 0
        for n, shape in zip(counts, net_driver.INPUT_SHAPES):
            fields.append(chunk[at:at + n].reshape(shape))
            at += n
        samples.append(fields)
    net_driver.run(samples[0])
    times = []
    outs = None
    # collector pauses would land in individual repetitions; keep it off
    # while the clock runs
    gc.disable()
    try:
        for _ in range(reps):
            t0 = time.perf_counter_ns()
            outs = [net_driver.run(s) for s in samples]
            times.append(time.perf_counter_ns() - t0)
    finally:
        gc.enable()
    merged = np.concatenate([o.reshape(-1) for out in outs for o in out])
    merged.astype("<f4").tofile(paths[1])
    if stats_path is not None:
        stats = {
            "reps": reps,
            "samples": len(samples),
            "invoke_ns": times,
            "load_bytes": 0,
            "configure_bytes": 0,
            "invoke_bytes": net_driver.BUFFER_BYTES,
            "peak_bytes": net_driver.BUFFER_BYTES,
        }
        with open(stats_path, "w") as f:
            json.dump(stats, f, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
'''


def emit_source(plan: EmissionPlan, out_dir) -> list[str]:
    """Write the program sources under out_dir/src; returns relative paths."""
    src = Path(out_dir) / "src"
    src.mkdir(parents=True, exist_ok=True)
    rel = []
    if plan.weights:
        (src / "net_weights.py").write_text(_emit_weights(plan),
                                            encoding="utf-8")
        rel.append("src/net_weights.py")
    (src / "net_driver.py").write_text(_emit_driver(plan), encoding="utf-8")
    rel.append("src/net_driver.py")
    (src / "__main__.py").write_text(_MAIN_SRC, encoding="utf-8")
    rel.append("src/__main__.py")

    for r in rel:
        text = (Path(out_dir) / r).read_text(encoding="utf-8")
        for token in _FORBIDDEN_TOKENS:
            if token in text:
                raise CodegenError(f"emitted source {r} contains forbidden "
                                   f"token {token!r}")
    return rel


# ---------------------------------------------------------------------------
# Compilation


def _resolve_toolchain(toolchain: ToolchainConfig) -> str:
    cmd = toolchain.command
    if os.sep in cmd:
        if os.path.isfile(cmd) and os.access(cmd, os.X_OK):
            return cmd
        raise ToolchainError(f"toolchain not found: {cmd}")
    resolved = shutil.which(cmd)
    if resolved is None:
        raise ToolchainError(f"toolchain not found: {cmd}")
    return resolved


def _run_tool(cmd) -> None:
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileError(f"toolchain step failed (rc={proc.returncode}): "
                           f"{proc.stderr.strip() or proc.stdout.strip()}")


def compile_program(out_dir, sources, toolchain: ToolchainConfig | None = None) -> str:
    """Check and package the emitted sources into one executable file."""
    toolchain = toolchain or ToolchainConfig()
    python = _resolve_toolchain(toolchain)
    out_dir = Path(out_dir)
    abs_sources = [out_dir / s for s in sources]
    _run_tool([python, *toolchain.flags, "-m", "py_compile",
               *[str(p) for p in abs_sources]])
    shutil.rmtree(out_dir / "src" / "__pycache__", ignore_errors=True)

    members = []
    if toolchain.strip:
        with tempfile.TemporaryDirectory(prefix="mlfuse-build-") as td:
            for p in abs_sources:
                shutil.copy(p, Path(td) / p.name)
            # -s keeps the throwaway build dir out of co_filename so the
            # bytecode is identical no matter where the build ran.
            _run_tool([python, *toolchain.strip_flags, "-m", "compileall",
                       "-b", "--invalidation-mode", "unchecked-hash", "-q",
                       "-s", td, td])
            for p in abs_sources:
                pyc = Path(td) / (p.stem + ".pyc")
                if not pyc.is_file():
                    raise CompileError(f"no bytecode produced for {p.name}")
                members.append((p.stem + ".pyc", pyc.read_bytes()))
    else:
        members = [(p.name, p.read_bytes()) for p in abs_sources]
    members.sort()

    exe = out_dir / "program"
    with open(exe, "wb") as f:
        f.write(b"#!" + python.encode() + b"\n")
        with zipfile.ZipFile(f, "w", zipfile.ZIP_STORED) as z:
            for name, data in members:
                info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                z.writestr(info, data)
    exe.chmod(exe.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return "program"


# ---------------------------------------------------------------------------
# Pipeline


def plan_digest(out_dir, sources, config: dict) -> str:
    h = hashlib.sha256()
    for rel in sorted(sources):
        h.update(rel.encode("utf-8") + b"\0")
        h.update((Path(out_dir) / rel).read_bytes())
        h.update(b"\0")
    h.update(json.dumps(config, sort_keys=True).encode("utf-8"))
    return h.hexdigest()


def pipeline(bundle: ModelBundle, out_dir, device: DeviceInfo | None = None,
             cfg: harness.VerifyConfig | None = None,
             toolchain: ToolchainConfig | None = None,
             registry=None) -> GeneratedArtifact:
    """Full build: extract, analyze, search, emit, compile, manifest."""
    device = device or DeviceInfo()
    cfg = cfg or harness.VerifyConfig()
    toolchain = toolchain or ToolchainConfig()
    registry = registry or default_registry()
    graph = bundle.graph

    problems = graphir.validate(bundle, custom_rules=registry.custom_shape_rules())
    if problems:
        raise GraphError("invalid bundle: " + "; ".join(problems))
    for tid in (*graph.inputs, *graph.outputs):
        if graph.tensors[tid].dtype is not DataType.F32:
            raise CodegenError("program IO is little-endian F32; graph "
                               f"tensor {tid} is {graph.tensors[tid].dtype.name}")

    extraction = extract_units(graph, device, registry)
    configs = analyze_config(graph, extraction, registry)
    result = search_status(bundle, extraction, configs, cfg, registry)
    plan = build_emission_plan(bundle, configs, result.assignment, device,
                               registry)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources = emit_source(plan, out_dir)
    digest = plan_digest(out_dir, sources, {
        "seed": cfg.seed, "delta": cfg.delta, "n_inputs": cfg.n_inputs,
        "threads": device.threads, "strip": toolchain.strip,
    })
    exe_rel = compile_program(out_dir, sources, toolchain)

    manifest = {
        "plan_digest": digest,
        "seed": cfg.seed,
        "delta": cfg.delta,
        "n_inputs": cfg.n_inputs,
        "candidates_evaluated": result.candidates_evaluated,
        "max_diff": result.max_error,
        "sources": sources,
        "executable": exe_rel,
        "device": {"threads": device.threads,
                   "vector_hint": device.vector_hint},
        "strip": toolchain.strip,
    }
    manifest_text = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    (out_dir / "build_manifest.json").write_text(manifest_text,
                                                 encoding="utf-8")
    return GeneratedArtifact(
        out_dir=str(out_dir), sources=sources,
        executable=str(out_dir / exe_rel), manifest=manifest,
        plan_digest=digest)
