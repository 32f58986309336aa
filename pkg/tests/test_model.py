import json

import numpy as np
import pytest
from conftest import model_gradient_error, random_batch, small_specs

from xmodal.arch import lstm_spec
from xmodal.errors import ContractError, ShapeError
from xmodal.model import build_model, forward, load_model, model_from_dict, model_to_dict, save_model
from xmodal.rng import Rng


@pytest.mark.parametrize("name", sorted(small_specs()))
def test_full_model_gradients(name):
    assert model_gradient_error(small_specs()[name], seed=0) < 1e-4


@pytest.mark.parametrize("name", sorted(small_specs()))
def test_logits_shape_and_probabilities(name):
    model = build_model(small_specs()[name], Rng(1))
    seq, statics, _ = random_batch(1, T=12, B=5)
    z = model.logits(seq, statics)
    assert z.shape == (5,)
    p = model.predict_proba(seq, statics)
    assert np.all((p > 0) & (p < 1))


def test_input_contracts():
    model = build_model(lstm_spec((2, 2, 2), head=(1,)), Rng(0))
    with pytest.raises(ShapeError):
        model.logits(np.zeros((4, 2, 9)), np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        model.logits(np.zeros((4, 2, 10)), np.zeros((3, 4)))
    with pytest.raises(ContractError):
        model.logits(np.zeros((0, 2, 10)), np.zeros((2, 4)))
    with pytest.raises(ContractError):
        model.logits(np.zeros((4, 2, 10)), np.zeros((2, 4)), training=True)


def test_build_is_deterministic():
    a = build_model(small_specs()["xlstm_a"], Rng(5))
    b = build_model(small_specs()["xlstm_a"], Rng(5))
    for k in a.params:
        assert np.array_equal(a.params[k].data, b.params[k].data)


def test_dnn_sees_only_the_last_window():
    spec = small_specs()["dnn"]
    model = build_model(spec, Rng(0))
    seq, statics, _ = random_batch(2, T=8, B=2)
    base = model.logits(seq, statics).data
    seq2 = seq.copy()
    seq2[: 8 - spec.dnn_window] += 5.0
    assert np.array_equal(model.logits(seq2, statics).data, base)
    seq2[-1] += 1.0
    assert not np.allclose(model.logits(seq2, statics).data, base)


def test_sh_cut_ignores_steps():
    model = build_model(small_specs()["sh_cut"], Rng(0))
    seq, statics, _ = random_batch(3, T=6)
    base = model.logits(seq, statics).data
    seq[:, :, 9] += 3.0
    assert np.array_equal(model.logits(seq, statics).data, base)


def test_streams_without_crosses_are_independent():
    # with strategy N the sleep input can only reach the output through the sleep stream
    from xmodal import tensor as tn

    model = build_model(small_specs()["xlstm_n"], Rng(0))
    seq, statics, _ = random_batch(4, T=5)
    X = tn.Tensor(seq, requires_grad=True)
    finals = model._recurrent(X, False, None)
    (g,) = tn.gradients(tn.sum(finals[0][-1]), [X])  # weight stream
    assert np.all(g[:, :, 1:] == 0.0) and np.any(g[:, :, 0] != 0.0)


def test_strategy_b_passes_peer_features():
    from xmodal import tensor as tn

    model = build_model(small_specs()["xlstm_b"], Rng(0))
    seq, statics, _ = random_batch(4, T=5)
    X = tn.Tensor(seq, requires_grad=True)
    finals = model._recurrent(X, False, None)
    (g,) = tn.gradients(tn.sum(finals[0][-1]), [X])
    assert np.any(g[:, :, 1:9] != 0.0) and np.any(g[:, :, 9] != 0.0)


def test_forward_single_example():
    model = build_model(small_specs()["lstm"], Rng(0))
    seq, statics, _ = random_batch(0, T=10, B=1)
    p = forward(model, (seq[:, 0], statics[0]))
    assert np.isclose(p, model.predict_proba(seq, statics)[0])


@pytest.mark.parametrize("name", ["lstm", "sh_wsl", "dnn"])
def test_checkpoint_round_trip(tmp_path, name):
    model = build_model(small_specs()[name], Rng(3))
    model.stats = {"weight_kg": {"mean": 80.0, "std": 10.0}}
    path = tmp_path / "m.json"
    save_model(model, path, provenance={"seed": 3})
    again = load_model(path)
    seq, statics, _ = random_batch(5, T=11)
    assert np.array_equal(again.logits(seq, statics).data, model.logits(seq, statics).data)
    assert again.stats == model.stats
    assert json.dumps(model_to_dict(again)) == json.dumps(model_to_dict(model))


def test_checkpoint_rejects_foreign_parameters():
    d = model_to_dict(build_model(small_specs()["lstm"], Rng(0)))
    d["params"]["bogus.W"] = {"shape": [1], "data": [0.0]}
    with pytest.raises(ContractError):
        model_from_dict(d)


def test_shared_parameters_are_shared_in_the_model():
    model = build_model(small_specs()["sh_all"], Rng(0))
    layers = [model.layers[f"{m}.l1"] for m in ("weight", "sleep", "steps")]
    assert layers[0].Wyf is layers[1].Wyf is layers[2].Wyf
    assert layers[0].Wxf is not layers[1].Wxf
