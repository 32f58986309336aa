import itertools

import numpy as np
import pytest

from xmodal.arch import dnn_spec, lstm_spec, sh_spec, xlstm_spec
from xmodal.features import MODALITIES


def small_specs():
    """One tiny spec per variant, cheap enough for finite differences."""
    head = (4, 1)
    w = {"weight": [3, 3, 2], "sleep": [3, 4, 3], "steps": [2, 2, 2]}
    cross = {(a, b): 1 for a, b in itertools.permutations(MODALITIES, 2)}
    return {
        "lstm": lstm_spec((3, 4, 3), head=head),
        "xlstm_a": xlstm_spec("A", w, cross, head=head),
        "xlstm_b": xlstm_spec("B", w, head=head),
        "xlstm_n": xlstm_spec("N", w, head=head),
        "sh_all": sh_spec("ALL", {m: [3, 3, 2] for m in MODALITIES}, head=head),
        "sh_wsl": sh_spec("WSL", {"weight": [3, 3, 2], "sleep": [3, 3, 2], "steps": [2, 3, 2]}, head=head),
        "sh_cut": sh_spec("CUT", {"weight": [3, 4, 3], "sleep": [3, 4, 3]}, head=head),
        "dnn": dnn_spec(window=3, hidden=(4, 4), head=head),
    }


@pytest.fixture
def specs():
    return small_specs()


def random_batch(seed, T=4, B=3):
    g = np.random.default_rng(seed)
    seq = g.normal(size=(T, B, 10))
    statics = g.normal(size=(B, 4))
    labels = np.array([1, 0, 1][:B] + [0] * max(0, B - 3))
    return seq, statics, labels


def random_spec(g):
    """A random valid ArchitectureSpec drawn with numpy generator ``g``."""
    from xmodal.arch import VARIANTS

    variant = VARIANTS[g.integers(len(VARIANTS))]
    head = tuple(int(x) for x in g.integers(1, 9, size=g.integers(0, 3))) + (1,)
    w = lambda depth: [int(x) for x in g.integers(1, 7, size=depth)]  # noqa: E731
    if variant == "dnn":
        return dnn_spec(window=int(g.integers(1, 11)), hidden=tuple(w(int(g.integers(1, 4)))), head=head)
    if variant == "lstm":
        k = int(g.integers(1, 4))
        mods = sorted(g.choice(MODALITIES, size=k, replace=False), key=MODALITIES.index)
        return lstm_spec(w(int(g.integers(1, 4))), modalities=mods, head=head)
    if variant in ("xlstm_a", "xlstm_b", "xlstm_n"):
        depth = 3 if variant != "xlstm_n" else int(g.integers(1, 4))
        widths = {m: w(depth) for m in MODALITIES}
        cross = {(a, b): int(g.integers(1, 5)) for a, b in itertools.permutations(MODALITIES, 2)}
        return xlstm_spec(variant[-1], widths, cross, head=head)
    depth = int(g.integers(1, 4))
    shared = w(depth)
    if variant == "sh_all":
        return sh_spec("ALL", {m: shared for m in MODALITIES}, head=head)
    widths = {"weight": shared, "sleep": list(shared)}
    if variant == "sh_wsl":
        widths["steps"] = w(depth)
    return sh_spec("WSL" if variant == "sh_wsl" else "CUT", widths, head=head)


def enumerate_scalars(model):
    """Count trainable scalars by walking every layer object, shared ones once."""
    seen = {}
    for layer in model.layers.values():
        for t in layer.tensors():
            seen[id(t)] = t.data.size
    for W, b in model.dense:
        seen[id(W)] = W.data.size
        seen[id(b)] = b.data.size
    return sum(seen.values())


def model_gradient_error(spec, seed):
    """Max relative error of full-model loss gradients against central differences."""
    from xmodal import tensor as tn
    from xmodal.gradcheck import finite_diff_check
    from xmodal.model import build_model
    from xmodal.rng import Rng
    from xmodal.train import weighted_bce

    model = build_model(spec, Rng(seed), dropout_p=0.1)
    seq, statics, labels = random_batch(seed)

    def loss():
        # a fresh rng per call keeps the dropout masks fixed across evaluations
        z = model.logits(seq, statics, training=True, rng=Rng(seed).child("dropout"))
        return tn.sum(weighted_bce(tn.apply("logistic", z), labels, 1.4, 0.7))

    return finite_diff_check(loss, model.parameters())
