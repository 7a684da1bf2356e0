"""Computing-unit registry: per-operator kernels plus their configuration.

A computing unit binds one operator kind, one data type, and one variant
(reference or tiled) to a kernel template. Known configuration is resolved
from node options into a ParamRecord; settings the container does not carry
are declared as StatusField entries and must be supplied by the caller,
either from the table shipped with the runtime or by search.

Status fields come in two modes. A "data" field tells the caller how to lay
out weight payload bytes before handing them to the kernel; it is consumed
by layout_weight_arrays and never passed into the kernel. An "arg" field is
forwarded to the kernel as a keyword argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import graphir
from ..graphir import (
    ADD, AVERAGE_POOL_2D, CONCATENATION, CONV_2D, DEPTHWISE_CONV_2D,
    FULLY_CONNECTED, MAX_POOL_2D, PAD, RELU, RESHAPE, SOFTMAX,
    DataType, OperatorNode, op_kind, same_padding,
)
from . import ops


class RegistryError(Exception):
    pass


class StatusError(Exception):
    pass


class ParamError(Exception):
    pass


class PrepareError(Exception):
    pass


@dataclass(frozen=True)
class DeviceInfo:
    threads: int = 1
    vector_hint: str = "none"

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.vector_hint not in ("none", "wide"):
            raise ValueError(f"unknown vector_hint {self.vector_hint!r}")


@dataclass(frozen=True)
class UnitKey:
    op_id: int | str
    dtype: DataType
    variant: str  # "reference" or "tiled"


@dataclass(frozen=True)
class StatusField:
    name: str
    domain: tuple
    data_kind: str  # "input", "weights", or "param"
    mode: str  # "data" or "arg"
    value_changing: bool


def _always(values, status) -> bool:
    return True


@dataclass
class ComputingUnit:
    key: UnitKey
    template_id: str
    fn: object
    status_schema: tuple[StatusField, ...] = ()
    supported: object = _always
    param_check: object = None  # optional: values -> error string or None


@dataclass
class ParamRecord:
    """Resolved known configuration for one operator instance."""
    op_kind: str
    values: dict

    def __post_init__(self):
        v = self.values
        for key in ("pad_before_h", "pad_after_h", "pad_before_w", "pad_after_w"):
            if key in v and v[key] < 0:
                raise ParamError(f"{self.op_kind}: {key} is negative")
        lo, hi = v.get("activation_min"), v.get("activation_max")
        if lo is not None and hi is not None and lo > hi:
            raise ParamError(f"{self.op_kind}: activation range inverted")


# keys that depend on tensor shapes or the device, not on operator options;
# they are left out of the configuration-class signature
_SIG_EXCLUDE_DEFAULT = frozenset({
    "in_shape", "out_shape", "in_shapes", "count", "batch",
    "in_features", "out_features", "threads", "weight_slots",
})
_SIG_EXCLUDE = {
    "CONV_2D": _SIG_EXCLUDE_DEFAULT | {"filter_h", "filter_w"},
    "DEPTHWISE_CONV_2D": _SIG_EXCLUDE_DEFAULT | {"filter_h", "filter_w"},
}


def class_signature(record: ParamRecord) -> str:
    """Canonical string over the option-derived knowns of a record.

    Two operators whose units and signatures agree carry the same unknown
    settings, so the searcher may bind them to one configuration class.
    """
    exclude = _SIG_EXCLUDE.get(record.op_kind, _SIG_EXCLUDE_DEFAULT)
    items = sorted((k, repr(v)) for k, v in record.values.items()
                   if k not in exclude)
    return repr(items)


@dataclass
class StatusAssignment:
    """Chosen status values, grouped by configuration class.

    per_op mirrors the choices onto operator indices for execution.
    """
    class_choices: dict
    per_op: list[dict] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Option resolution

_ACT_CLAMPS = {
    "NONE": (None, None),
    "RELU": (0.0, None),
    "RELU6": (0.0, 6.0),
}


def _opt(node: OperatorNode, key: str):
    if key not in node.options:
        raise ParamError(f"{op_kind(node)}: missing required option '{key}'")
    return node.options[key]


def _clamps(node: OperatorNode) -> tuple:
    act = _opt(node, "activation")
    if act not in _ACT_CLAMPS:
        raise ParamError(f"invalid option value: activation={act!r}")
    return _ACT_CLAMPS[act]


def _stride(node: OperatorNode, key: str) -> int:
    v = _opt(node, key)
    if type(v) is not int or v < 1:
        raise ParamError(f"invalid option value: {key}={v!r}")
    return v


def _count(shape) -> int:
    n = 1
    for d in shape:
        n *= d
    return n


def _spatial_pads(node, in_hw, out_hw, eff_hw, strides):
    mode = _opt(node, "padding")
    if mode == "VALID":
        return 0, 0, 0, 0
    if mode != "SAME":
        raise ParamError(f"invalid option value: padding={mode!r}")
    pbh, pah = same_padding(in_hw[0], out_hw[0], eff_hw[0], strides[0])
    pbw, paw = same_padding(in_hw[1], out_hw[1], eff_hw[1], strides[1])
    return pbh, pah, pbw, paw


def _map_conv(node, in_shapes, out_shape, depthwise: bool) -> dict:
    x, f = in_shapes[0], in_shapes[1]
    sh, sw = _stride(node, "stride_h"), _stride(node, "stride_w")
    dh, dw = _stride(node, "dilation_h"), _stride(node, "dilation_w")
    fh, fw = f[1], f[2]
    eff = ((fh - 1) * dh + 1, (fw - 1) * dw + 1)
    pbh, pah, pbw, paw = _spatial_pads(
        node, (x[1], x[2]), (out_shape[1], out_shape[2]), eff, (sh, sw))
    lo, hi = _clamps(node)
    values = {
        "in_shape": tuple(x), "out_shape": tuple(out_shape),
        "filter_h": fh, "filter_w": fw,
        "stride_h": sh, "stride_w": sw, "dilation_h": dh, "dilation_w": dw,
        "pad_before_h": pbh, "pad_after_h": pah,
        "pad_before_w": pbw, "pad_after_w": paw,
        "activation_min": lo, "activation_max": hi,
    }
    if depthwise:
        values["depth_multiplier"] = _stride(node, "depth_multiplier")
    return values


def _map_pool(node, in_shapes, out_shape) -> dict:
    x = in_shapes[0]
    fh, fw = _stride(node, "filter_h"), _stride(node, "filter_w")
    sh, sw = _stride(node, "stride_h"), _stride(node, "stride_w")
    pbh, pah, pbw, paw = _spatial_pads(
        node, (x[1], x[2]), (out_shape[1], out_shape[2]), (fh, fw), (sh, sw))
    lo, hi = _clamps(node)
    return {
        "in_shape": tuple(x), "out_shape": tuple(out_shape),
        "filter_h": fh, "filter_w": fw, "stride_h": sh, "stride_w": sw,
        "pad_before_h": pbh, "pad_after_h": pah,
        "pad_before_w": pbw, "pad_after_w": paw,
        "activation_min": lo, "activation_max": hi,
    }


# ---------------------------------------------------------------------------
# Registry


class KernelRegistry:
    def __init__(self):
        self._units: dict[UnitKey, ComputingUnit] = {}
        self._custom_mappers: dict[str, object] = {}
        self._custom_shapes: dict[str, object] = {}
        self._custom_prepares: dict[str, object] = {}

    def register_builtin(self, unit: ComputingUnit) -> None:
        if unit.key in self._units:
            raise RegistryError(f"duplicate registration for {unit.key}")
        self._units[unit.key] = unit

    def register_custom(self, name: str, unit: ComputingUnit, *,
                        param_mapper, shape_rule, prepare_fn=None) -> None:
        if unit.key.op_id != name:
            raise RegistryError(f"unit key {unit.key} does not carry name {name!r}")
        self.register_builtin(unit)
        self._custom_mappers[name] = param_mapper
        self._custom_shapes[name] = shape_rule
        if prepare_fn is not None:
            self._custom_prepares[name] = prepare_fn

    def get(self, key: UnitKey) -> ComputingUnit:
        unit = self._units.get(key)
        if unit is None:
            raise RegistryError(f"unknown unit {key}")
        return unit

    def lookup(self, op_id, dtype: DataType, device: DeviceInfo) -> ComputingUnit:
        order = ("tiled", "reference") if device.threads > 1 else ("reference", "tiled")
        for variant in order:
            unit = self._units.get(UnitKey(op_id, dtype, variant))
            if unit is not None:
                return unit
        name = graphir.OPCODE_NAMES.get(op_id, op_id)
        raise RegistryError(f"unsupported operation: no unit for {name} {dtype.name}")

    def units(self):
        return list(self._units.values())

    def custom_shape_rules(self) -> dict:
        return dict(self._custom_shapes)

    # -- known-parameter resolution

    def map_options_to_params(self, node: OperatorNode, shapes: dict,
                              weight_ids=frozenset()) -> ParamRecord:
        """Resolve a node's options plus shapes into the kernel's knowns."""
        kind = op_kind(node)
        in_shapes = [tuple(shapes[t]) for t in node.inputs]
        out_shape = tuple(shapes[node.outputs[0]])

        if node.is_custom:
            mapper = self._custom_mappers.get(kind)
            if mapper is None:
                raise ParamError(f"no parameter mapper for custom operator {kind!r}")
            return ParamRecord(kind, mapper(node, in_shapes, out_shape))

        op = node.op_id
        if op in (CONV_2D, DEPTHWISE_CONV_2D):
            values = _map_conv(node, in_shapes, out_shape,
                               depthwise=op == DEPTHWISE_CONV_2D)
        elif op in (AVERAGE_POOL_2D, MAX_POOL_2D):
            values = _map_pool(node, in_shapes, out_shape)
        elif op == FULLY_CONNECTED:
            lo, hi = _clamps(node)
            values = {
                "batch": in_shapes[0][0], "in_features": in_shapes[0][1],
                "out_features": in_shapes[1][0],
                "activation_min": lo, "activation_max": hi,
            }
        elif op == SOFTMAX:
            beta = _opt(node, "beta")
            if type(beta) not in (int, float):
                raise ParamError(f"invalid option value: beta={beta!r}")
            values = {"in_shape": in_shapes[0], "beta": float(beta)}
        elif op == RESHAPE:
            values = {"count": _count(in_shapes[0]), "out_shape": out_shape}
        elif op == RELU:
            values = {"count": _count(in_shapes[0])}
        elif op == ADD:
            lo, hi = _clamps(node)
            values = {"count": _count(in_shapes[0]),
                      "activation_min": lo, "activation_max": hi}
        elif op == CONCATENATION:
            axis = _opt(node, "axis")
            if type(axis) is not int:
                raise ParamError(f"invalid option value: axis={axis!r}")
            values = {
                "axis": axis, "in_shapes": tuple(in_shapes),
                "out_shape": out_shape,
                "weight_slots": tuple(k for k, t in enumerate(node.inputs)
                                      if t in weight_ids),
            }
        elif op == PAD:
            flat = _opt(node, "paddings")
            values = {
                "in_shape": in_shapes[0], "out_shape": out_shape,
                "paddings": tuple((flat[2 * i], flat[2 * i + 1])
                                  for i in range(len(flat) // 2)),
            }
        else:
            raise ParamError(f"no parameter mapping for opcode {op}")
        return ParamRecord(kind, values)

    # -- shape cross-check

    def prepare(self, unit: ComputingUnit, params: ParamRecord,
                input_shapes: list) -> list:
        """Recompute output shapes from knowns; raises on any contradiction."""
        kind = params.op_kind
        v = params.values
        input_shapes = [tuple(s) for s in input_shapes]

        if kind in ("CONV_2D", "DEPTHWISE_CONV_2D"):
            x = input_shapes[0]
            if x != v["in_shape"]:
                raise PrepareError(f"{kind}: input shape {x} does not match "
                                   f"resolved {v['in_shape']}")
            eff_h = (v["filter_h"] - 1) * v["dilation_h"] + 1
            eff_w = (v["filter_w"] - 1) * v["dilation_w"] + 1
            oh = (x[1] + v["pad_before_h"] + v["pad_after_h"] - eff_h) \
                // v["stride_h"] + 1
            ow = (x[2] + v["pad_before_w"] + v["pad_after_w"] - eff_w) \
                // v["stride_w"] + 1
            f = input_shapes[1]
            if kind == "CONV_2D":
                want_f = (v["out_shape"][3], v["filter_h"], v["filter_w"], x[3])
                cout = f[0]
            else:
                cout = x[3] * v["depth_multiplier"]
                want_f = (1, v["filter_h"], v["filter_w"], cout)
            if f != want_f:
                raise PrepareError(f"{kind}: filter shape {f}, expected {want_f}")
            out = (x[0], oh, ow, cout)
        elif kind in ("AVERAGE_POOL_2D", "MAX_POOL_2D"):
            x = input_shapes[0]
            if x != v["in_shape"]:
                raise PrepareError(f"{kind}: input shape mismatch")
            oh = (x[1] + v["pad_before_h"] + v["pad_after_h"] - v["filter_h"]) \
                // v["stride_h"] + 1
            ow = (x[2] + v["pad_before_w"] + v["pad_after_w"] - v["filter_w"]) \
                // v["stride_w"] + 1
            out = (x[0], oh, ow, x[3])
        elif kind == "FULLY_CONNECTED":
            x, wt = input_shapes[0], input_shapes[1]
            if x != (v["batch"], v["in_features"]):
                raise PrepareError("FULLY_CONNECTED: input shape mismatch")
            if wt != (v["out_features"], v["in_features"]):
                raise PrepareError(f"FULLY_CONNECTED: weight shape {wt} does "
                                   f"not match resolved features")
            out = (v["batch"], v["out_features"])
        elif kind == "SOFTMAX":
            if input_shapes[0] != v["in_shape"]:
                raise PrepareError("SOFTMAX: input shape mismatch")
            out = input_shapes[0]
        elif kind in ("RELU", "ADD"):
            if _count(input_shapes[0]) != v["count"]:
                raise PrepareError(f"{kind}: element count mismatch")
            out = input_shapes[0]
        elif kind == "RESHAPE":
            if _count(input_shapes[0]) != v["count"] \
                    or _count(v["out_shape"]) != v["count"]:
                raise PrepareError("RESHAPE: element count mismatch")
            out = v["out_shape"]
        elif kind == "CONCATENATION":
            if tuple(input_shapes) != v["in_shapes"]:
                raise PrepareError("CONCATENATION: input shapes mismatch")
            out = v["out_shape"]
        elif kind == "PAD":
            x = input_shapes[0]
            if x != v["in_shape"]:
                raise PrepareError("PAD: input shape mismatch")
            out = tuple(d + b + a for d, (b, a) in zip(x, v["paddings"]))
        else:
            fn = self._custom_prepares.get(kind)
            if fn is not None:
                return fn(params, input_shapes)
            if "count" in v and _count(input_shapes[0]) != v["count"]:
                raise PrepareError(f"{kind}: element count mismatch")
            out = input_shapes[0]

        declared = v.get("out_shape")
        if declared is not None and tuple(declared) != out:
            raise PrepareError(f"{kind}: computed output {out} contradicts "
                               f"resolved {tuple(declared)}")
        return [out]


def check_unit_params(unit: ComputingUnit, params: ParamRecord) -> None:
    if unit.param_check is not None:
        problem = unit.param_check(params.values)
        if problem:
            raise ParamError(f"{params.op_kind}: {problem}")


# ---------------------------------------------------------------------------
# Status handling and execution


def validate_status(unit: ComputingUnit, params: ParamRecord,
                    status: dict) -> dict:
    """Check a status dict against the unit schema; return the arg subset."""
    names = {f.name for f in unit.status_schema}
    for key in status:
        if key not in names:
            raise StatusError(f"{params.op_kind}: unexpected status '{key}'")
    arg_kwargs = {}
    for f in unit.status_schema:
        if f.name not in status:
            raise StatusError(f"{params.op_kind}: missing status '{f.name}'")
        value = status[f.name]
        if not any(value == d for d in f.domain):
            raise StatusError(f"{params.op_kind}: invalid status value "
                              f"{f.name}={value!r}, domain {f.domain}")
        if f.mode == "arg":
            arg_kwargs[f.name] = value
    if not unit.supported(params.values, status):
        raise StatusError(f"{params.op_kind}: unsupported status combination "
                          f"{status}")
    return arg_kwargs


def eval_unit(unit: ComputingUnit, params: ParamRecord, status: dict,
              inputs, weights, outputs) -> None:
    """Run one unit: validate status, then execute the kernel template."""
    arg_kwargs = validate_status(unit, params, status)
    unit.fn(list(inputs), list(weights), list(outputs),
            **params.values, **arg_kwargs)


def layout_weight_arrays(params: ParamRecord, status: dict,
                         arrays: list) -> tuple[list, int]:
    """Flatten canonical weight arrays into the status-selected layout.

    Returns the flat arrays plus the byte count of reorder copies (zero when
    every payload is already in canonical order).
    """
    layout = status.get("weights_layout")
    kind = params.op_kind
    flats = []
    copied = 0
    for slot, arr in enumerate(arrays):
        if slot == 0 and layout is not None:
            if kind == "CONV_2D" and layout == "HWIO":
                re = np.ascontiguousarray(arr.transpose(1, 2, 3, 0))
                copied += re.nbytes
                flats.append(re.reshape(-1))
                continue
            if kind == "FULLY_CONNECTED" and layout == "transposed":
                re = np.ascontiguousarray(arr.transpose())
                copied += re.nbytes
                flats.append(re.reshape(-1))
                continue
            if layout not in ("OHWI", "row_major"):
                raise StatusError(f"{kind}: no layout transform for "
                                  f"weights_layout={layout!r}")
        flats.append(np.ascontiguousarray(arr).reshape(-1))
    return flats, copied


# ---------------------------------------------------------------------------
# Default registry contents


def _fc_tiled_supported(values, status) -> bool:
    # cached row reuse needs the feature-major weight walk
    if status.get("lhs_cacheable") and status.get("weights_layout") == "row_major":
        return False
    return True


def _add_i32_check(values):
    if values["activation_min"] is not None or values["activation_max"] is not None:
        return "I32 ADD supports only NONE activation"
    return None


def _scale_shift_mapper(node, in_shapes, out_shape) -> dict:
    for key in ("scale", "shift"):
        if key not in node.options:
            raise ParamError(f"SCALE_SHIFT: missing required option '{key}'")
        if type(node.options[key]) not in (int, float):
            raise ParamError(f"invalid option value: {key}")
    return {
        "count": _count(in_shapes[0]),
        "scale": float(node.options["scale"]),
        "shift": float(node.options["shift"]),
    }


def _scale_shift_shape(node, in_shapes):
    return [tuple(in_shapes[0])]


_WEIGHTS_LAYOUT_CONV = StatusField(
    "weights_layout", ("OHWI", "HWIO"), "weights", "data", True)
_WEIGHTS_LAYOUT_FC = StatusField(
    "weights_layout", ("row_major", "transposed"), "weights", "data", True)
_LHS_CACHEABLE = StatusField(
    "lhs_cacheable", (False, True), "input", "arg", False)
_IM2COL = StatusField("im2col", (False, True), "input", "arg", False)


def build_default_registry() -> KernelRegistry:
    reg = KernelRegistry()
    f32, i32 = DataType.F32, DataType.I32

    def unit(op, dtype, variant, template, **kw):
        reg.register_builtin(ComputingUnit(
            UnitKey(op, dtype, variant), template, ops.KERNELS[template], **kw))

    unit(CONV_2D, f32, "reference", "conv2d_f32",
         status_schema=(_WEIGHTS_LAYOUT_CONV,))
    unit(CONV_2D, f32, "tiled", "conv2d_f32_tiled",
         status_schema=(_IM2COL,))
    unit(DEPTHWISE_CONV_2D, f32, "reference", "depthwise_conv2d_f32")
    unit(AVERAGE_POOL_2D, f32, "reference", "avg_pool2d_f32")
    unit(MAX_POOL_2D, f32, "reference", "max_pool2d_f32")
    unit(FULLY_CONNECTED, f32, "reference", "fully_connected_f32",
         status_schema=(_WEIGHTS_LAYOUT_FC, _LHS_CACHEABLE))
    unit(FULLY_CONNECTED, f32, "tiled", "fully_connected_f32_tiled",
         status_schema=(_WEIGHTS_LAYOUT_FC, _LHS_CACHEABLE),
         supported=_fc_tiled_supported)
    unit(SOFTMAX, f32, "reference", "softmax_f32")
    unit(RELU, f32, "reference", "relu_f32")
    unit(RESHAPE, f32, "reference", "reshape_copy")
    unit(RESHAPE, i32, "reference", "reshape_copy")
    unit(ADD, f32, "reference", "add_f32")
    unit(ADD, i32, "reference", "add_i32", param_check=_add_i32_check)
    unit(CONCATENATION, f32, "reference", "concat_f32")
    unit(PAD, f32, "reference", "pad_f32")

    reg.register_custom(
        "SCALE_SHIFT",
        ComputingUnit(UnitKey("SCALE_SHIFT", f32, "reference"),
                      "scale_shift_f32", ops.KERNELS["scale_shift_f32"]),
        param_mapper=_scale_shift_mapper,
        shape_rule=_scale_shift_shape,
    )
    return reg
