import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xmodal.arch import count_params, lstm_spec
from xmodal.budget import STRATEGIES, ModalityScores, allocate, modality_weights, sweep_k
from xmodal.errors import ContractError, InfeasibleBudgetError

# unimodal validation AUCs reported for weight, sleep and steps
REPORTED_SCORES = {"weight": 0.8062, "sleep": 0.8017, "steps": 0.7418}


def naive_weights(scores, k):
    powered = {m: s**k for m, s in scores.items()}
    total = sum(powered.values())
    return {m: v / total for m, v in powered.items()}


@pytest.mark.parametrize("k", [0, 1, 10, 20, 30])
def test_weights_match_naive_power_ratio(k):
    got = modality_weights(ModalityScores(REPORTED_SCORES, k))
    want = naive_weights(REPORTED_SCORES, k)
    for m in want:
        assert got[m] == pytest.approx(want[m], rel=1e-12)


def test_k30_weights_frozen():
    w = modality_weights(ModalityScores(REPORTED_SCORES, 30))
    assert w["weight"] == pytest.approx(0.51875, abs=5e-6)
    assert w["sleep"] == pytest.approx(0.43856, abs=5e-6)
    assert w["steps"] == pytest.approx(0.04269, abs=5e-6)


def test_huge_k_is_stable():
    w = modality_weights(ModalityScores(REPORTED_SCORES, 5000))
    assert np.isfinite(list(w.values())).all()
    assert w["weight"] == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(
    s=st.lists(st.floats(0.5, 1.0), min_size=3, max_size=3),
    k=st.floats(0.0, 60.0),
)
def test_weights_are_a_distribution_ordered_like_scores(s, k):
    scores = dict(zip(("weight", "sleep", "steps"), s))
    w = modality_weights(ModalityScores(scores, k))
    assert sum(w.values()) == pytest.approx(1.0)
    for a, b in itertools.permutations(scores, 2):
        if scores[a] > scores[b]:
            assert w[a] >= w[b]


def test_k30_strategy_b_frozen():
    res = allocate(lstm_spec(), ModalityScores(REPORTED_SCORES, 30), "B")
    assert res.spec.stream_widths == {"weight": [14, 29, 58], "sleep": [12, 24, 49], "steps": [1, 2, 5]}
    assert res.achieved_params == count_params(res.spec) == 75457
    assert res.budget == 75825


@pytest.mark.parametrize("k, strategy", list(itertools.product([0, 10, 20, 30], STRATEGIES)))
def test_budget_grid_within_two_percent(k, strategy):
    res = allocate(lstm_spec(), ModalityScores(REPORTED_SCORES, k), strategy)
    assert res.within_tolerance
    assert abs(res.achieved_params - res.budget) / res.budget <= 0.02
    assert res.spec.variant in ("xlstm_a", "xlstm_b", "xlstm_n", "sh_all", "sh_wsl", "sh_cut")


def test_strategy_a_feeds_the_weak_modality_most():
    cw = allocate(lstm_spec(), ModalityScores(REPORTED_SCORES, 30), "A").spec.cross_widths
    assert cw["weight->steps"] > cw["weight->sleep"]
    assert cw["sleep->steps"] > cw["sleep->weight"]


def test_k0_gives_uniform_streams():
    w = allocate(lstm_spec(), ModalityScores(REPORTED_SCORES, 0), "N").spec.stream_widths
    assert w["weight"] == w["sleep"] == w["steps"]


def test_sharing_strategies_respect_groups():
    s = ModalityScores(REPORTED_SCORES, 30)
    allw = allocate(lstm_spec(), s, "ALL").spec.stream_widths
    assert allw["weight"] == allw["sleep"] == allw["steps"]
    wsl = allocate(lstm_spec(), s, "WSL").spec
    assert wsl.stream_widths["weight"] == wsl.stream_widths["sleep"]
    assert wsl.stream_widths["steps"][-1] < wsl.stream_widths["weight"][-1]
    assert "steps" not in allocate(lstm_spec(), s, "CUT").spec.stream_widths


@settings(max_examples=25, deadline=None)
@given(
    s=st.lists(st.floats(0.55, 0.95), min_size=3, max_size=3),
    k=st.sampled_from([0.0, 5.0, 10.0, 30.0]),
    strategy=st.sampled_from(STRATEGIES),
)
def test_allocation_meets_budget_for_random_scores(s, k, strategy):
    res = allocate(lstm_spec(), ModalityScores(dict(zip(("weight", "sleep", "steps"), s)), k), strategy)
    assert res.achieved_params == count_params(res.spec)
    assert res.relative_gap <= 0.02


def test_infeasible_budget():
    tiny = lstm_spec((1, 1, 1), head=(1,))
    with pytest.raises(InfeasibleBudgetError):
        allocate(tiny, ModalityScores(REPORTED_SCORES, 30), "A")


def test_bad_inputs():
    with pytest.raises(ContractError):
        ModalityScores({"weight": 0.8, "gps": 0.7})
    with pytest.raises(ContractError):
        ModalityScores({"weight": -0.1})
    with pytest.raises(ContractError):
        allocate(lstm_spec(), ModalityScores(REPORTED_SCORES, 1), "Z")
    with pytest.raises(ContractError):
        allocate(lstm_spec(), ModalityScores({"weight": 0.8, "sleep": 0.7}, 1), "B")


def test_sweep_collects_results_and_failures():
    grid = sweep_k(lstm_spec(), REPORTED_SCORES, ["B", "N"], [10, 30])
    assert set(grid) == {(10, "B"), (10, "N"), (30, "B"), (30, "N")}
    tiny = sweep_k(lstm_spec((1, 1, 1), head=(1,)), REPORTED_SCORES, ["A"], [30])
    assert isinstance(tiny[(30, "A")], InfeasibleBudgetError)


def test_result_serialises_with_accounting():
    d = allocate(lstm_spec(), ModalityScores(REPORTED_SCORES, 30), "B").to_dict()
    assert d["accounting"]["budget"] == 75825
    assert d["variant"] == "xlstm_b"
