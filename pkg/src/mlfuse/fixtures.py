"""Deterministic model bundles for tests, benchmarks, and demos.

Every builder takes a seed and produces the same bytes for the same seed.
Weights are uniform in [-0.5, 0.5], biases in [-0.1, 0.1].
"""

from __future__ import annotations

import numpy as np

from .graphir import (
    CONV_2D, DEPTHWISE_CONV_2D, FULLY_CONNECTED, MAX_POOL_2D, RELU, RESHAPE,
    SOFTMAX, ComputationalGraph, DataType, ModelBundle, OperatorNode,
    TensorSpec, WeightStore,
)


class _Builder:
    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self.tensors: list[TensorSpec] = []
        self.operators: list[OperatorNode] = []
        self.store = WeightStore()
        self._next_key = 0

    def tensor(self, name: str, shape, dtype=DataType.F32) -> int:
        tid = len(self.tensors)
        self.tensors.append(TensorSpec(tid, name, dtype, tuple(shape)))
        return tid

    def weight(self, name: str, shape, lo=-0.5, hi=0.5) -> int:
        arr = self.rng.uniform(lo, hi, size=tuple(shape)).astype(np.float32)
        return self.weight_array(name, arr)

    def bias(self, name: str, units: int) -> int:
        return self.weight(name, (units,), lo=-0.1, hi=0.1)

    def weight_array(self, name: str, arr: np.ndarray) -> int:
        key = self._next_key
        self._next_key += 1
        self.store.put_array(key, arr)
        tid = len(self.tensors)
        dtype = DataType.F32 if arr.dtype == np.float32 else DataType.I32
        self.tensors.append(TensorSpec(tid, name, dtype, tuple(arr.shape), key))
        return tid

    def op(self, op_id, inputs, outputs, options) -> None:
        self.operators.append(OperatorNode(op_id, tuple(inputs),
                                           tuple(outputs), options))

    def bundle(self, inputs, outputs) -> ModelBundle:
        graph = ComputationalGraph(self.tensors, self.operators,
                                   tuple(inputs), tuple(outputs))
        return ModelBundle(graph, self.store)


def _conv_opts(activation: str, padding: str = "VALID") -> dict:
    return {"stride_h": 1, "stride_w": 1, "dilation_h": 1, "dilation_w": 1,
            "padding": padding, "activation": activation}


def build_identity(seed: int = 11) -> ModelBundle:
    b = _Builder(seed)
    t_in = b.tensor("x", (1, 4))
    t_out = b.tensor("y", (4,))
    b.op(RESHAPE, [t_in], [t_out], {"new_shape": [4]})
    return b.bundle([t_in], [t_out])


def build_mlp(seed: int = 22) -> ModelBundle:
    b = _Builder(seed)
    t_in = b.tensor("x", (1, 4))
    w1 = b.weight("fc1_w", (8, 4))
    b1 = b.bias("fc1_b", 8)
    h1 = b.tensor("h1", (1, 8))
    b.op(FULLY_CONNECTED, [t_in, w1, b1], [h1], {"activation": "NONE"})
    w2 = b.weight("fc2_w", (3, 8))
    b2 = b.bias("fc2_b", 3)
    h2 = b.tensor("h2", (1, 3))
    b.op(FULLY_CONNECTED, [h1, w2, b2], [h2], {"activation": "NONE"})
    t_out = b.tensor("probs", (1, 3))
    b.op(SOFTMAX, [h2], [t_out], {"beta": 1.0})
    return b.bundle([t_in], [t_out])


def build_lenet(seed: int = 33) -> ModelBundle:
    b = _Builder(seed)
    t_in = b.tensor("image", (1, 28, 28, 1))
    w1 = b.weight("conv1_w", (6, 5, 5, 1))
    b1 = b.bias("conv1_b", 6)
    c1 = b.tensor("conv1", (1, 24, 24, 6))
    b.op(CONV_2D, [t_in, w1, b1], [c1], _conv_opts("RELU"))
    p1 = b.tensor("pool1", (1, 12, 12, 6))
    b.op(MAX_POOL_2D, [c1], [p1],
         {"filter_h": 2, "filter_w": 2, "stride_h": 2, "stride_w": 2,
          "padding": "VALID", "activation": "NONE"})
    w2 = b.weight("conv2_w", (16, 5, 5, 6))
    b2 = b.bias("conv2_b", 16)
    c2 = b.tensor("conv2", (1, 8, 8, 16))
    b.op(CONV_2D, [p1, w2, b2], [c2], _conv_opts("RELU"))
    p2 = b.tensor("pool2", (1, 4, 4, 16))
    b.op(MAX_POOL_2D, [c2], [p2],
         {"filter_h": 2, "filter_w": 2, "stride_h": 2, "stride_w": 2,
          "padding": "VALID", "activation": "NONE"})
    flat = b.tensor("flat", (1, 256))
    b.op(RESHAPE, [p2], [flat], {"new_shape": [1, 256]})
    w3 = b.weight("fc1_w", (120, 256))
    b3 = b.bias("fc1_b", 120)
    f1 = b.tensor("fc1", (1, 120))
    b.op(FULLY_CONNECTED, [flat, w3, b3], [f1], {"activation": "RELU"})
    w4 = b.weight("fc2_w", (84, 120))
    b4 = b.bias("fc2_b", 84)
    f2 = b.tensor("fc2", (1, 84))
    b.op(FULLY_CONNECTED, [f1, w4, b4], [f2], {"activation": "RELU"})
    w5 = b.weight("fc3_w", (10, 84))
    b5 = b.bias("fc3_b", 10)
    f3 = b.tensor("fc3", (1, 10))
    b.op(FULLY_CONNECTED, [f2, w5, b5], [f3], {"activation": "NONE"})
    t_out = b.tensor("probs", (1, 10))
    b.op(SOFTMAX, [f3], [t_out], {"beta": 1.0})
    return b.bundle([t_in], [t_out])


def build_dwblock(seed: int = 44) -> ModelBundle:
    b = _Builder(seed)
    t_in = b.tensor("x", (1, 8, 8, 4))
    w1 = b.weight("expand_w", (8, 1, 1, 4))
    b1 = b.bias("expand_b", 8)
    e = b.tensor("expand", (1, 8, 8, 8))
    b.op(CONV_2D, [t_in, w1, b1], [e], _conv_opts("NONE"))
    wd = b.weight("dw_w", (1, 3, 3, 8))
    bd = b.bias("dw_b", 8)
    d = b.tensor("dw", (1, 8, 8, 8))
    b.op(DEPTHWISE_CONV_2D, [e, wd, bd], [d],
         dict(_conv_opts("NONE", padding="SAME"), depth_multiplier=1))
    w2 = b.weight("project_w", (4, 1, 1, 8))
    b2 = b.bias("project_b", 4)
    p = b.tensor("project", (1, 8, 8, 4))
    b.op(CONV_2D, [d, w2, b2], [p], _conv_opts("NONE"))
    t_out = b.tensor("y", (1, 8, 8, 4))
    b.op(RELU, [p], [t_out], {})
    return b.bundle([t_in], [t_out])


def build_custom(seed: int = 55) -> ModelBundle:
    b = _Builder(seed)
    t_in = b.tensor("x", (1, 4))
    w1 = b.weight("fc1_w", (8, 4))
    b1 = b.bias("fc1_b", 8)
    h1 = b.tensor("h1", (1, 8))
    b.op(FULLY_CONNECTED, [t_in, w1, b1], [h1], {"activation": "NONE"})
    ss = b.tensor("scaled", (1, 8))
    b.op("SCALE_SHIFT", [h1], [ss], {"scale": 1.25, "shift": -0.5})
    w2 = b.weight("fc2_w", (3, 8))
    b2 = b.bias("fc2_b", 3)
    h2 = b.tensor("h2", (1, 3))
    b.op(FULLY_CONNECTED, [ss, w2, b2], [h2], {"activation": "NONE"})
    t_out = b.tensor("probs", (1, 3))
    b.op(SOFTMAX, [h2], [t_out], {"beta": 1.0})
    return b.bundle([t_in], [t_out])


FIXTURES = {
    "identity": build_identity,
    "mlp": build_mlp,
    "lenet": build_lenet,
    "dwblock": build_dwblock,
    "custom": build_custom,
}


def build_fixture(name: str, seed: int | None = None) -> ModelBundle:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}, have {sorted(FIXTURES)}")
    builder = FIXTURES[name]
    return builder() if seed is None else builder(seed)
