"""Model construction and forward pass for every architecture variant."""

import itertools
import json

import numpy as np

from . import tensor as tn
from .arch import JOINT, SHARED, ArchitectureSpec, cross_key, dense_plan, lstm_plan
from .errors import ContractError, ShapeError
from .features import MODALITY_COLUMNS, SEQ_FEATURES
from .lstm import GATES, LstmLayerParams, dropout_mask, lstm_layer_forward
from .rng import Rng
from .tensor import Tensor

BN_EPS = 1e-5
BN_MOMENTUM = 0.9


class Model:
    """Parameters plus wiring for one :class:`ArchitectureSpec`.

    ``params`` maps names to tensors; a recurrent block shared by several
    streams appears once, and every layer using it holds the same object.
    """

    def __init__(self, spec, dropout_p=0.1):
        self.spec = spec
        self.dropout_p = float(dropout_p)
        self.params = {}
        self.layers = {}
        self.dense = []
        self.bn = []
        self.bn_running = []
        self.stats = None  # normalisation stats of the training data, when known

    def parameters(self):
        return list(self.params.values())

    def n_params(self):
        return int(sum(p.size for p in self.params.values()))

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    # ------------------------------------------------------------ forward

    def logits(self, seq, statics, training=False, rng=None):
        """Pre-sigmoid scores, shape ``(B,)``.

        ``seq`` is ``(T, B, 10)`` normalised day features, ``statics`` is
        ``(B, static_dim)``. Either may be a Tensor (the dreamer differentiates
        through ``seq``).
        """
        seq = tn.as_tensor(seq)
        statics = tn.as_tensor(statics)
        if seq.data.ndim != 3 or seq.shape[2] != len(SEQ_FEATURES):
            raise ShapeError(f"expected (T, B, {len(SEQ_FEATURES)}) day features, got {seq.shape}")
        if seq.shape[0] < 1:
            raise ContractError("empty sequence")
        if statics.data.ndim != 2 or statics.shape != (seq.shape[1], self.spec.static_dim):
            raise ShapeError(f"expected statics of shape {(seq.shape[1], self.spec.static_dim)}, got {statics.shape}")
        if training and self.dropout_p > 0 and rng is None:
            raise ContractError("training-mode forward needs an rng for dropout")

        s = self.spec
        if s.variant == "dnn":
            feats = self._dnn_trunk(seq, training, rng)
        else:
            finals = self._recurrent(seq, training, rng)
            feats = tn.concat([h[-1] for h in finals], axis=-1)
        h = tn.concat([feats, statics], axis=-1) if s.static_dim else feats
        head = self.dense[len(self.dense) - len(s.head_widths):]
        for k, (W, b) in enumerate(head):
            h = tn.matmul(h, W) + b
            if k == len(head) - 1:
                break
            if self.bn:
                h = self._batchnorm(k, h, training)
            h = tn.apply("relu", h)
        return tn.reshape(h, (h.shape[0],))

    def predict_proba(self, seq, statics):
        return tn.logistic(self.logits(seq, statics).data)

    def _lstm(self, name, x, training, rng):
        child = rng.child(name) if (training and rng is not None) else None
        return lstm_layer_forward(self.layers[name], x, self.dropout_p, training, child)

    def _recurrent(self, seq, training, rng):
        s = self.spec
        v = s.variant

        def inputs(m):
            cols = list(MODALITY_COLUMNS[m])
            return tn.getitem(seq, (slice(None), slice(None), cols))

        if v == "lstm":
            cols = [c for m in s.modalities for c in MODALITY_COLUMNS[m]]
            h = seq if cols == list(range(len(SEQ_FEATURES))) else tn.getitem(seq, (slice(None), slice(None), cols))
            for li in range(len(s.stream_widths[JOINT])):
                h = self._lstm(f"{JOINT}.l{li + 1}", h, training, rng)
            return [h]

        mods = s.modalities
        if v == "xlstm_n" or v in SHARED:
            outs = []
            for m in mods:
                h = inputs(m)
                for li in range(len(s.stream_widths[m])):
                    h = self._lstm(f"{m}.l{li + 1}", h, training, rng)
                outs.append(h)
            return outs

        h1 = {m: self._lstm(f"{m}.l1", inputs(m), training, rng) for m in mods}
        h2 = {m: self._lstm(f"{m}.l2", h1[m], training, rng) for m in mods}
        if v == "xlstm_a":
            cross = {
                (a, b): self._lstm(f"cross.{cross_key(a, b)}", h1[a], training, rng)
                for a, b in itertools.permutations(mods, 2)
            }
            incoming = {m: [cross[(o, m)] for o in mods if o != m] for m in mods}
        else:
            # strategy B: identity cross paths from peers' first layer
            incoming = {m: [h1[o] for o in mods if o != m] for m in mods}
        return [
            self._lstm(f"{m}.l3", tn.concat([h2[m]] + incoming[m], axis=-1), training, rng) for m in mods
        ]

    def _dnn_trunk(self, seq, training, rng):
        s = self.spec
        T, B, F = seq.shape
        w = s.dnn_window
        if T >= w:
            x = tn.getitem(seq, slice(T - w, T))
        else:
            x = tn.concat([Tensor(np.zeros((w - T, B, F))), seq], axis=0)
        x = tn.reshape(tn.transpose(x, (1, 0, 2)), (B, w * F))
        if training and self.dropout_p > 0:
            x = x * dropout_mask(x.shape, self.dropout_p, rng.child("dnn.input"))
        for W, b in self.dense[: len(s.dnn_hidden)]:
            x = tn.apply("relu", tn.matmul(x, W) + b)
        return x

    def _batchnorm(self, k, h, training):
        gamma, beta = self.bn[k]
        run = self.bn_running[k]
        if training:
            mu = tn.mean(h, axis=0, keepdims=True)
            xc = h - mu
            var = tn.mean(xc * xc, axis=0, keepdims=True)
            run["mean"] = BN_MOMENTUM * run["mean"] + (1 - BN_MOMENTUM) * mu.data[0]
            run["var"] = BN_MOMENTUM * run["var"] + (1 - BN_MOMENTUM) * var.data[0]
            h = xc * tn.power(var + BN_EPS, -0.5)
        else:
            h = (h - run["mean"]) * (1.0 / np.sqrt(run["var"] + BN_EPS))
        return h * gamma + beta


def build_model(spec, rng=None, dropout_p=0.1):
    """Allocate and initialise parameters for ``spec``.

    LSTM weights are Xavier-uniform with forget biases 1 and other biases 0;
    fully-connected weights are He-normal with zero biases.
    """
    if isinstance(spec, dict):
        spec = ArchitectureSpec.from_dict(spec)
    spec.validate()
    rng = rng if rng is not None else Rng(0)
    model = Model(spec, dropout_p)
    shared = {}
    for layer in lstm_plan(spec):
        lrng = rng.child(layer.name)
        sr = shared.get(layer.share) if layer.share else None
        params = LstmLayerParams.create(int(layer.d_in), int(layer.d_out), lrng, shared_recurrent=sr)
        if layer.share and layer.share not in shared:
            shared[layer.share] = {f"Wy{g}": getattr(params, f"Wy{g}") for g in GATES}
        model.layers[layer.name] = params
        for pname, t in params.named().items():
            if layer.share and pname.startswith("Wy"):
                key = f"shared.{layer.share}.{pname}"
            else:
                key = f"{layer.name}.{pname}"
            model.params.setdefault(key, t)
    dense = dense_plan(spec)
    n_trunk = len(dense) - len(spec.head_widths)
    for k, (d_in, d_out) in enumerate(dense):
        prefix = f"dnn.{k}" if k < n_trunk else f"head.{k - n_trunk}"
        W = tn.init((d_in, d_out), "he", rng.child(prefix + ".W"))
        b = tn.init((d_out,), "zeros", rng)
        model.params[prefix + ".W"] = W
        model.params[prefix + ".b"] = b
        model.dense.append((W, b))
    if spec.head_batchnorm:
        for k, w in enumerate(spec.head_widths[:-1]):
            g = tn.init((w,), "ones", rng)
            b = tn.init((w,), "zeros", rng)
            model.params[f"head.{k}.bn_gamma"] = g
            model.params[f"head.{k}.bn_beta"] = b
            model.bn.append((g, b))
            model.bn_running.append({"mean": np.zeros(w), "var": np.ones(w)})
    return model


def forward(model, example, training=False, rng=None):
    """Success probability for one example given as ``(seq (T, 10), statics (4,))``."""
    seq, statics = example
    seq = np.asarray(seq, dtype=np.float64)
    statics = np.asarray(statics, dtype=np.float64)
    logit = model.logits(seq[:, None, :], statics[None, :], training, rng)
    return float(tn.logistic(logit.data)[0])


# ------------------------------------------------------------ checkpoints

def model_to_dict(model):
    return {
        "spec": model.spec.to_dict(),
        "dropout_p": model.dropout_p,
        "params": {k: {"shape": list(t.shape), "data": t.data.reshape(-1).tolist()} for k, t in model.params.items()},
        "bn_running": [{k: v.tolist() for k, v in r.items()} for r in model.bn_running],
        "stats": model.stats,
    }


def model_from_dict(d):
    model = build_model(ArchitectureSpec.from_dict(d["spec"]), Rng(0), d.get("dropout_p", 0.1))
    for k, entry in d["params"].items():
        if k not in model.params:
            raise ContractError(f"checkpoint parameter {k!r} does not belong to this architecture")
        model.params[k].data[...] = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
    for r, saved in zip(model.bn_running, d.get("bn_running", [])):
        for k in r:
            r[k] = np.asarray(saved[k], dtype=np.float64)
    model.stats = d.get("stats")
    return model


def save_model(model, path, provenance=None):
    d = model_to_dict(model)
    if provenance is not None:
        d = {"provenance": provenance, **d}
    with open(path, "w") as fh:
        json.dump(d, fh, sort_keys=False)


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
