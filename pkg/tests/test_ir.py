import numpy as np
import pytest

from nn2c.errors import CycleError, DanglingInputError, GraphError, ShapeError
from nn2c.fixtures import build_chain, force_calibration, terrain_classifier
from nn2c.interpreter import forward_traced
from nn2c.ir import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    INPUT_ID,
    LayerSpec,
    LayerWeights,
    MaxPool1D,
    NetworkGraph,
    TensorData,
    execution_order,
    infer_shapes,
    layer_output_shape,
    param_count,
    validate_graph,
)

from helpers import random_chain, random_input


# --- TensorData -------------------------------------------------------------

def test_tensor_requires_matching_buffer():
    with pytest.raises(ShapeError):
        TensorData((2, 3), np.zeros(5, dtype=np.float32))


def test_tensor_rejects_degenerate_shapes():
    with pytest.raises(ShapeError):
        TensorData((), np.zeros(1, dtype=np.float32))
    with pytest.raises(ShapeError):
        TensorData((0, 2), np.zeros(0, dtype=np.float32))


def test_tensor_is_float32_row_major():
    t = TensorData.from_array([[1.0, 2.0], [3.0, 4.0]])
    assert t.shape == (2, 2)
    assert t.data.dtype == np.float32
    assert t.data.tolist() == [1.0, 2.0, 3.0, 4.0]


# --- shape inference --------------------------------------------------------

def test_conv1d_valid_shape():
    kind = Conv1D(filters=3, kernel_size=5)
    assert layer_output_shape(kind, (100, 1), "c") == (96, 3)


def test_maxpool1d_shape():
    kind = MaxPool1D(pool_size=5, stride=5)
    assert layer_output_shape(kind, (96, 3), "p") == (19, 3)


def test_dense_rejects_rank2_input():
    with pytest.raises(ShapeError):
        layer_output_shape(Dense(units=8), (19, 3), "d")


@pytest.mark.parametrize("stride,expected", [(1, 100), (2, 50), (3, 34)])
def test_conv1d_same_shape(stride, expected):
    kind = Conv1D(filters=2, kernel_size=5, stride=stride, padding="same")
    assert layer_output_shape(kind, (100, 1), "c") == (expected, 2)


def test_conv_kernel_larger_than_input_fails():
    with pytest.raises(ShapeError):
        layer_output_shape(Conv1D(filters=1, kernel_size=7), (5, 1), "c")


def test_softmax_requires_rank1_output():
    kind = Conv1D(filters=2, kernel_size=3, activation=Activation.SOFTMAX)
    with pytest.raises(ShapeError):
        layer_output_shape(kind, (10, 1), "c")


def test_conv2d_shape_per_axis():
    kind = Conv2D(filters=4, kernel_h=3, kernel_w=2, stride_h=2, stride_w=1)
    assert layer_output_shape(kind, (9, 6, 3), "c") == (4, 5, 4)


def test_flatten_shape():
    assert layer_output_shape(Flatten(), (4, 5, 2), "f") == (40,)


# --- execution order --------------------------------------------------------

def _bare_graph(specs, output_id, input_shape=(4,)):
    return NetworkGraph(name="t", input_shape=input_shape,
                        layers={s.id: s for s in specs}, weights={},
                        output_id=output_id)


def test_order_linear_chain():
    g = _bare_graph([
        LayerSpec("a", Flatten(), (INPUT_ID,)),
        LayerSpec("b", Flatten(), ("a",)),
        LayerSpec("c", Flatten(), ("b",)),
    ], "c")
    assert execution_order(g) == ["a", "b", "c"]


def test_order_dangling_input():
    g = _bare_graph([
        LayerSpec("a", Flatten(), (INPUT_ID,)),
        LayerSpec("b", Flatten(), ("zz",)),
    ], "b")
    with pytest.raises(DanglingInputError):
        execution_order(g)


def test_order_cycle():
    g = _bare_graph([
        LayerSpec("a", Flatten(), ("b",)),
        LayerSpec("b", Flatten(), ("a",)),
    ], "b")
    with pytest.raises(CycleError):
        execution_order(g)


def test_order_breaks_ties_lexicographically():
    g = _bare_graph([
        LayerSpec("a", Flatten(), (INPUT_ID,)),
        LayerSpec("z", Flatten(), ("a",)),
        LayerSpec("c", Flatten(), ("a",)),
    ], "z")
    assert execution_order(g) == ["a", "c", "z"]


def test_order_is_topological_on_random_fanout_dags():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n_nodes = int(rng.integers(2, 12))
        specs = [LayerSpec("n000", Flatten(), (INPUT_ID,))]
        for i in range(1, n_nodes):
            pred = specs[int(rng.integers(0, len(specs)))].id
            specs.append(LayerSpec(f"n{i:03d}", Flatten(), (pred,)))
        g = _bare_graph(specs, specs[-1].id)
        order = execution_order(g)
        position = {lid: i for i, lid in enumerate(order)}
        assert sorted(position) == sorted(g.layers)
        for spec in specs:
            for pred in spec.inputs:
                if pred != INPUT_ID:
                    assert position[pred] < position[spec.id]
        assert execution_order(g) == order  # deterministic


# --- parameter accounting ----------------------------------------------------

def test_param_count_minimal_dense():
    g = build_chain("one", (1,), [("d", Dense(units=1))], seed=0)
    assert param_count(g) == 2


def test_param_count_force_calibration_is_159():
    assert param_count(force_calibration()) == 159


def test_param_count_terrain_is_20582():
    assert param_count(terrain_classifier()) == 20582


def test_param_count_matches_serialized_scalars():
    g = force_calibration()
    total = sum(w.kernel.size + w.bias.size for w in g.weights.values())
    assert param_count(g) == total == 159


# --- validation ---------------------------------------------------------------

def test_validate_requires_weights_on_dense():
    g = _bare_graph([LayerSpec("d", Dense(units=2), (INPUT_ID,))], "d")
    with pytest.raises(GraphError):
        validate_graph(g)


def test_validate_rejects_weights_on_pool():
    g = build_chain("p", (10, 1), [("c", Conv1D(filters=1, kernel_size=3)),
                                   ("p", MaxPool1D(pool_size=2, stride=2))],
                    seed=1)
    g.weights["p"] = g.weights["c"]
    with pytest.raises(GraphError):
        validate_graph(g)


def test_validate_rejects_multiple_input_consumers():
    g = _bare_graph([
        LayerSpec("a", Flatten(), (INPUT_ID,)),
        LayerSpec("b", Flatten(), (INPUT_ID,)),
    ], "b")
    with pytest.raises(GraphError):
        validate_graph(g)


def test_validate_rejects_successors_of_output():
    g = _bare_graph([
        LayerSpec("a", Flatten(), (INPUT_ID,)),
        LayerSpec("b", Flatten(), ("a",)),
    ], "a")
    with pytest.raises(GraphError):
        validate_graph(g)


def test_validate_rejects_merge_fanin():
    g = _bare_graph([
        LayerSpec("a", Flatten(), (INPUT_ID,)),
        LayerSpec("b", Flatten(), ("a", "a")),
    ], "b")
    with pytest.raises(GraphError):
        validate_graph(g)


def test_validate_rejects_wrong_kernel_shape():
    g = build_chain("w", (3,), [("d", Dense(units=2))], seed=2)
    bad = g.weights["d"]
    g.weights["d"] = LayerWeights(kernel=TensorData.from_array(np.zeros((2, 3))),
                                  bias=bad.bias)
    with pytest.raises(ShapeError):
        validate_graph(g)


# --- properties ----------------------------------------------------------------

def test_interpreter_shapes_match_inference_on_random_chains():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = random_chain(rng)
        shapes = infer_shapes(g)
        traced = forward_traced(g, random_input(rng, g))
        assert set(traced) == set(shapes)
        for lid, tensor in traced.items():
            assert tensor.shape == shapes[lid]


def test_shape_map_and_order_are_deterministic():
    g = force_calibration()
    assert infer_shapes(g) == infer_shapes(g)
    assert execution_order(g) == execution_order(g)
