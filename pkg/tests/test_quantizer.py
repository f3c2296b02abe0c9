import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_input

from nn2c.errors import DomainError
from nn2c.fixtures import build_chain, composite_cnn
from nn2c.interpreter import forward
from nn2c.ir import Dense, INPUT_ID, LayerSpec, LayerWeights, NetworkGraph, TensorData
from nn2c.quantizer import (
    QFormat,
    fidelity_report,
    forward_fixed,
    fraction_bits_for,
    quantize_counted,
    quantize_value,
)


def identity_net(n=1):
    spec = LayerSpec("d", Dense(units=n), (INPUT_ID,))
    weights = LayerWeights(kernel=TensorData.from_array(np.eye(n)),
                           bias=TensorData.from_array(np.zeros(n)))
    return NetworkGraph(name="identity", input_shape=(n,),
                        layers={"d": spec}, weights={"d": weights},
                        output_id="d")


# --- quantize_value -----------------------------------------------------------

def test_quantize_exact_grid_point():
    assert quantize_value(0.5, QFormat(16, 8)) == 0.5


def test_quantize_rounds_half_away_from_zero():
    assert quantize_value(0.1, QFormat(16, 8)) == 0.1015625  # 26/256
    assert quantize_value(-0.1, QFormat(16, 8)) == -0.1015625


def test_quantize_saturates_at_rail():
    assert quantize_value(200.0, QFormat(16, 8)) == 127.99609375  # 32767/256
    assert quantize_value(-200.0, QFormat(16, 8)) == -128.0


def test_quantize_counts_saturated_elements():
    values = np.asarray([0.25, 200.0, -500.0], dtype=np.float32)
    snapped, n_sat = quantize_counted(values, QFormat(16, 8))
    assert n_sat == 2
    assert snapped.tolist() == [0.25, 127.99609375, -128.0]


@given(st.floats(-1e6, 1e6, allow_nan=False),
       st.sampled_from([2, 8, 16, 32]),
       st.integers(0, 15))
@settings(max_examples=300, deadline=None)
def test_quantize_is_idempotent(x, total_bits, frac_bits):
    q = QFormat(total_bits, min(frac_bits, total_bits - 1))
    once = quantize_value(x, q)
    assert quantize_value(once, q) == once


def test_quantize_error_bounded_by_half_step():
    rng = np.random.default_rng(31)
    for _ in range(200):
        total = int(rng.choice([8, 16, 32]))
        frac = int(rng.integers(0, total - 1))
        q = QFormat(total, frac)
        limit = (q.int_max - 1) / (1 << frac)
        x = float(rng.uniform(-limit, limit))
        assert abs(quantize_value(x, q) - x) <= 2.0 ** (-frac - 1)


def test_qformat_domain():
    with pytest.raises(DomainError):
        QFormat(12, 4)
    with pytest.raises(DomainError):
        QFormat(8, 8)
    with pytest.raises(DomainError):
        QFormat(8, -1)


def test_fraction_bits_policy():
    assert fraction_bits_for(0.9, 16) == 15
    assert fraction_bits_for(3.0, 16) == 13
    assert fraction_bits_for(0.0, 8) == 7
    assert fraction_bits_for(1e9, 2) == 0


# --- forward_fixed --------------------------------------------------------------

def test_fixed_identity_with_explicit_format():
    g = identity_net()
    out = forward_fixed(g, TensorData.from_array([0.1]), 16, frac_bits=8)
    assert float(out.data[0]) == 0.1015625


def test_fixed_32_matches_float_reference():
    g = composite_cnn()
    rng = np.random.default_rng(32)
    for _ in range(5):
        x = random_input(rng, g)
        fixed = forward_fixed(g, x, 32)
        plain = forward(g, x)
        assert np.abs(fixed.data.astype(np.float64)
                      - plain.data.astype(np.float64)).max() <= 1e-6


def test_zero_weight_network_is_exact_at_every_width():
    g = build_chain("z", (4,), [("d", Dense(units=3))], seed=33)
    zeros = LayerWeights(kernel=TensorData.from_array(np.zeros((4, 3))),
                         bias=TensorData.from_array(np.zeros(3)))
    g.weights["d"] = zeros
    x = TensorData.from_array([0.2, -0.4, 0.6, -0.8])
    plain = forward(g, x)
    assert plain.data.tolist() == [0.0, 0.0, 0.0]
    for k in (2, 8, 16, 32):
        fixed = forward_fixed(g, x, k)
        assert fixed.data.tolist() == plain.data.tolist()


# --- fidelity report -------------------------------------------------------------

def test_report_monotone_and_exact_at_32():
    rng = np.random.default_rng(34)
    for draw in range(8):
        g = composite_cnn(seed=2000 + draw)
        inputs = [random_input(rng, g) for _ in range(4)]
        report = fidelity_report(g, inputs, [2, 8, 16, 32])
        eps = {k: e.epsilon for k, e in report.entries.items()}
        assert eps[2] >= eps[8] >= eps[16]
        assert eps[32] == 0.0
        assert report.entries[32].max_error == 0.0


def test_report_closed_form_on_identity_net():
    g = identity_net(n=6)
    rng = np.random.default_rng(35)
    x = TensorData.from_array(rng.uniform(-0.9, 0.9, 6))
    report = fidelity_report(g, [x], [8, 16])
    for k in (8, 16):
        fmt = QFormat(k, fraction_bits_for(float(np.abs(x.data).max()), k))
        expected = float(np.mean([abs(quantize_value(float(v), fmt) - float(v))
                                  for v in x.data]))
        assert report.entries[k].epsilon == pytest.approx(expected, abs=1e-12)


def test_report_requires_inputs_and_handles_single_k():
    g = identity_net()
    with pytest.raises(DomainError):
        fidelity_report(g, [], [8])
    report = fidelity_report(g, [TensorData.from_array([0.3])], [32])
    assert report.entries[32].epsilon == 0.0


def test_report_serialisations():
    g = identity_net()
    report = fidelity_report(g, [TensorData.from_array([0.3])], [2, 8])
    text = report.to_text()
    assert "mean_abs_err" in text and len(text.splitlines()) == 3
    payload = report.to_json_dict()
    assert set(payload) == {"2", "8"}
    assert {"epsilon", "max", "saturations"} <= set(payload["2"])
