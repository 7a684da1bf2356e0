import numpy as np
import pytest

import oracles

from mlfuse import fixtures, graphir, interpreter
from mlfuse.graphir import (
    ADD,
    CONCATENATION,
    PAD,
    ComputationalGraph,
    DataType,
    ModelBundle,
    OperatorNode,
    TensorSpec,
    WeightStore,
    graph_to_json,
    weights_to_bytes,
)
from mlfuse.interpreter import InterpreterError
from mlfuse.kernels import DeviceInfo, ParamError, PrepareError


@pytest.mark.parametrize("name", sorted(fixtures.FIXTURES))
def test_fixture_runs_and_output_shapes(name):
    bundle = fixtures.build_fixture(name)
    plan = interpreter.load(bundle)
    shapes = graphir.infer_shapes(
        bundle.graph,
        custom_rules=None if name != "custom" else
        __import__("mlfuse.kernels", fromlist=["default_registry"])
        .default_registry().custom_shape_rules())
    rng = np.random.default_rng(5)
    xs = [rng.uniform(-1, 1, shapes[t]).astype(np.float32)
          for t in bundle.graph.inputs]
    outs = interpreter.invoke(plan, xs)
    assert [o.shape for o in outs] == [shapes[t]
                                       for t in bundle.graph.outputs]
    assert all(o.dtype == np.float32 for o in outs)


def test_invoke_accepts_bare_array_for_single_input():
    plan = interpreter.load(fixtures.build_fixture("identity"))
    x = np.arange(4, dtype=np.float32).reshape(1, 4)
    out = interpreter.invoke(plan, x)[0]
    assert np.array_equal(out, x.reshape(4))


def test_invoke_is_deterministic():
    bundle = fixtures.build_fixture("lenet")
    a = interpreter.load(bundle)
    b = interpreter.load(bundle)
    x = np.random.default_rng(9).uniform(-1, 1, (1, 28, 28, 1)).astype(
        np.float32)
    oa = interpreter.invoke(a, x)[0]
    ob = interpreter.invoke(b, x)[0]
    assert oracles.bitwise_equal(oa, ob)


def test_softmax_output_is_distribution():
    plan = interpreter.load(fixtures.build_fixture("mlp"))
    x = np.random.default_rng(11).uniform(-1, 1, (1, 4)).astype(np.float32)
    out = interpreter.invoke(plan, x)[0]
    assert out.shape == (1, 3)
    assert np.all(out > 0)
    assert abs(float(out.sum()) - 1.0) < 1e-5


# -- phase counters -----------------------------------------------------------

def test_counters_unavailable_before_first_invoke():
    plan = interpreter.load(fixtures.build_fixture("mlp"))
    with pytest.raises(InterpreterError, match="invoke"):
        interpreter.counters(plan)


def test_lenet_counters_match_accounting():
    bundle = fixtures.build_fixture("lenet")
    plan = interpreter.load(bundle)
    interpreter.invoke(plan, np.zeros((1, 28, 28, 1), dtype=np.float32))
    c = interpreter.counters(plan)

    # load phase: the container itself (canonical graph text + weight payloads)
    graph_bytes = len(graph_to_json(bundle.graph).encode("utf-8"))
    weight_bytes = sum(len(e.data) for e in bundle.weights.entries.values())
    assert c.load_bytes == graph_bytes + weight_bytes

    # configure phase: activation buffers + relaid weight payloads (the two
    # conv filters and three fc weight matrices are copied into the layout
    # their kernels read)
    shapes = graphir.infer_shapes(bundle.graph)
    weight_ids = {t.id for t in bundle.graph.tensors
                  if t.weight_ref is not None}
    buf = sum(4 * int(np.prod(shapes[t.id]))
              for t in bundle.graph.tensors if t.id not in weight_ids)
    relaid = sum(len(bundle.weights.entries[t.weight_ref].data)
                 for t in bundle.graph.tensors
                 if t.weight_ref is not None and len(t.shape) > 1)
    assert c.configure_bytes == buf + relaid

    assert c.invoke_bytes == 0
    assert c.peak_bytes == c.load_bytes + c.configure_bytes

    # regression anchors for the fixture as shipped
    assert (c.load_bytes, c.configure_bytes, c.peak_bytes) == (
        179984, 204216, 384200)


def test_identity_counters():
    plan = interpreter.load(fixtures.build_fixture("identity"))
    interpreter.invoke(plan, np.zeros((1, 4), dtype=np.float32))
    c = interpreter.counters(plan)
    assert (c.load_bytes, c.configure_bytes, c.invoke_bytes, c.peak_bytes) == (
        229, 32, 0, 261)


# -- input validation ---------------------------------------------------------

def test_invoke_wrong_input_count():
    plan = interpreter.load(fixtures.build_fixture("mlp"))
    with pytest.raises(InterpreterError, match="expected 1 input"):
        interpreter.invoke(plan, [np.zeros((1, 4), dtype=np.float32)] * 2)


def test_invoke_wrong_dtype():
    plan = interpreter.load(fixtures.build_fixture("mlp"))
    with pytest.raises(InterpreterError, match="input tensor 0"):
        interpreter.invoke(plan, np.zeros((1, 4), dtype=np.float64))


def test_invoke_wrong_size():
    plan = interpreter.load(fixtures.build_fixture("mlp"))
    with pytest.raises(InterpreterError, match="input tensor 0"):
        interpreter.invoke(plan, np.zeros((1, 5), dtype=np.float32))


# -- device variants ----------------------------------------------------------

def test_threads_pick_tiled_variants_and_match_reference():
    bundle = fixtures.build_fixture("lenet")
    ref = interpreter.load(bundle, device=DeviceInfo(threads=1))
    par = interpreter.load(bundle, device=DeviceInfo(threads=2))
    variants = {s.unit.key.variant for s in par.steps}
    assert "tiled" in variants
    x = np.random.default_rng(21).uniform(-1, 1, (1, 28, 28, 1)).astype(
        np.float32)
    a = interpreter.invoke(ref, x)[0]
    b = interpreter.invoke(par, x)[0]
    assert oracles.bitwise_equal(a, b)


# -- operators without fixture coverage ---------------------------------------

def _add_concat_pad_bundle():
    g = ComputationalGraph(
        tensors=[
            TensorSpec(0, "x", DataType.F32, (1, 4)),
            TensorSpec(1, "c", DataType.F32, (1, 4), weight_ref=0),
            TensorSpec(2, "sum", DataType.F32, (1, 4)),
            TensorSpec(3, "cat", DataType.F32, (1, 8)),
            TensorSpec(4, "padded", DataType.F32, (1, 10)),
        ],
        operators=[
            OperatorNode(ADD, (0, 1), (2,), {"activation": "RELU"}),
            OperatorNode(CONCATENATION, (2, 1), (3,), {"axis": 1}),
            OperatorNode(PAD, (3,), (4,), {"paddings": [0, 0, 1, 1]}),
        ],
        inputs=(0,), outputs=(4,))
    store = WeightStore()
    store.put_array(0, np.array([[0.5, -2.0, 1.0, 0.25]], dtype=np.float32))
    return ModelBundle(g, store)


def test_add_concat_pad_chain():
    bundle = _add_concat_pad_bundle()
    assert graphir.validate(bundle) == []
    plan = interpreter.load(bundle)
    x = np.array([[1.0, 1.0, -3.0, 0.5]], dtype=np.float32)
    out = interpreter.invoke(plan, x)[0]
    const = np.array([[0.5, -2.0, 1.0, 0.25]], dtype=np.float32)
    summed = np.maximum(x + const, 0.0)
    cat = np.concatenate([summed, const], axis=1)
    want = np.pad(cat, ((0, 0), (1, 1)))
    assert out.shape == (1, 10)
    assert oracles.bitwise_equal(out, want.astype(np.float32))


def test_operator_errors_carry_index():
    # a fused activation on I32 ADD passes the container's option schema but
    # no registered unit accepts it, so configuration fails with the op index
    g = ComputationalGraph(
        tensors=[
            TensorSpec(0, "x", DataType.I32, (4,)),
            TensorSpec(1, "c", DataType.I32, (4,), weight_ref=0),
            TensorSpec(2, "y", DataType.I32, (4,)),
        ],
        operators=[OperatorNode(ADD, (0, 1), (2,), {"activation": "RELU"})],
        inputs=(0,), outputs=(2,))
    store = WeightStore()
    store.put_array(0, np.arange(4, dtype=np.int32))
    bad = ModelBundle(g, store)
    assert graphir.validate(bad) == []
    with pytest.raises((ParamError, PrepareError), match="operator 0"):
        interpreter.load(bad)


def test_invocation_counter():
    plan = interpreter.load(fixtures.build_fixture("identity"))
    x = np.zeros((1, 4), dtype=np.float32)
    interpreter.invoke(plan, x)
    interpreter.invoke(plan, x)
    assert plan.invocations == 2
