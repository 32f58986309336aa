"""LSTM cell and layer.

Gates, per time step::

    i = tanh(Wxi x + Wyi y_prev + bi)
    j, f, o = hard_sigmoid(Wx* x + Wy* y_prev + b*)
    c = c_prev * f + i * j
    y = tanh(c) * o

Sequences are laid out time-major, ``(T, B, d)``. A 2-d ``(T, d)`` input is
treated as a batch of one.
"""

from dataclasses import dataclass, fields

import numpy as np

from . import tensor as tn
from .errors import ContractError, ShapeError
from .tensor import Tensor, hard_sigmoid, hard_sigmoid_grad

GATES = ("i", "j", "f", "o")


@dataclass
class LstmLayerParams:
    Wxi: Tensor
    Wxj: Tensor
    Wxf: Tensor
    Wxo: Tensor
    Wyi: Tensor
    Wyj: Tensor
    Wyf: Tensor
    Wyo: Tensor
    bi: Tensor
    bj: Tensor
    bf: Tensor
    bo: Tensor

    @property
    def d_in(self):
        return self.Wxi.shape[0]

    @property
    def d_out(self):
        return self.Wxi.shape[1]

    def tensors(self):
        return [getattr(self, f.name) for f in fields(self)]

    def named(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def create(cls, d_in, d_out, rng, shared_recurrent=None):
        """Xavier weights, forget bias 1, other biases 0.

        ``shared_recurrent`` optionally supplies the four ``Wy*`` tensors so
        that several layers reference one storage object.
        """
        kw = {}
        for g in GATES:
            kw[f"Wx{g}"] = tn.init((d_in, d_out), "xavier", rng.child(f"Wx{g}"))
            if shared_recurrent is None:
                kw[f"Wy{g}"] = tn.init((d_out, d_out), "xavier", rng.child(f"Wy{g}"))
            else:
                w = shared_recurrent[f"Wy{g}"]
                if w.shape != (d_out, d_out):
                    raise ShapeError(f"shared Wy{g} has shape {w.shape}, layer needs {(d_out, d_out)}")
                kw[f"Wy{g}"] = w
            kw[f"b{g}"] = tn.init((d_out,), "ones" if g == "f" else "zeros", rng)
        return cls(**kw)

    @staticmethod
    def count(d_in, d_out):
        return 4 * (d_in * d_out + d_out * d_out + d_out)


def _check_dims(params, x_shape, y_shape):
    if x_shape[-1] != params.d_in or y_shape[-1] != params.d_out:
        raise ShapeError(
            f"lstm: input width {x_shape[-1]} / state width {y_shape[-1]} do not match "
            f"layer {params.d_in}->{params.d_out}"
        )


def lstm_cell_step(params, x_t, y_prev, c_prev):
    """One step built from primitive ops; returns ``(y_t, c_t)``.

    This is the reference path. :func:`lstm_layer_forward` uses a fused
    equivalent for speed.
    """
    x_t, y_prev, c_prev = tn.as_tensor(x_t), tn.as_tensor(y_prev), tn.as_tensor(c_prev)
    _check_dims(params, x_t.shape, y_prev.shape)
    p = params.named()

    def pre(g):
        return tn.matmul(x_t, p[f"Wx{g}"]) + tn.matmul(y_prev, p[f"Wy{g}"]) + p[f"b{g}"]

    i = tn.apply("tanh", pre("i"))
    j = tn.apply("hard_sigmoid", pre("j"))
    f = tn.apply("hard_sigmoid", pre("f"))
    o = tn.apply("hard_sigmoid", pre("o"))
    c_t = c_prev * f + i * j
    y_t = tn.apply("tanh", c_t) * o
    return y_t, c_t


def dropout_mask(shape, p, rng):
    """Inverted-dropout mask, or None when ``p == 0``."""
    if p <= 0.0:
        return None
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def lstm_layer_forward(params, X, dropout_p=0.0, training=False, rng=None, fused=True):
    """Unroll the cell over ``X`` from zero state; returns every output frame.

    In training mode with ``dropout_p > 0`` a fresh inverted-dropout mask is
    drawn for each time step and applied to the input only.
    """
    X = tn.as_tensor(X)
    squeeze = X.data.ndim == 2
    if squeeze:
        X = tn.reshape(X, (X.shape[0], 1, X.shape[1]))
    if X.data.ndim != 3:
        raise ShapeError(f"lstm layer expects (T, B, d) or (T, d) input, got {X.shape}")
    T, B, d_in = X.shape
    if T < 1:
        raise ContractError("lstm layer: empty sequence")
    if d_in != params.d_in:
        raise ShapeError(f"lstm layer: input width {d_in} does not match layer {params.d_in}->{params.d_out}")

    mask = None
    if training and dropout_p > 0.0:
        if rng is None:
            raise ContractError("dropout in training mode needs an rng")
        mask = dropout_mask((T, B, d_in), dropout_p, rng)

    if fused:
        Y = _fused_layer(params, X, mask)
    else:
        y = Tensor(np.zeros((B, params.d_out)))
        c = Tensor(np.zeros((B, params.d_out)))
        frames = []
        for t in range(T):
            x_t = X[t] if mask is None else X[t] * mask[t]
            y, c = lstm_cell_step(params, x_t, y, c)
            frames.append(tn.reshape(y, (1, B, params.d_out)))
        Y = tn.concat(frames, axis=0)
    if squeeze:
        Y = tn.reshape(Y, (T, params.d_out))
    return Y


def _fused_layer(params, X, mask):
    P = params
    n = P.d_out
    Wx = np.concatenate([P.Wxi.data, P.Wxj.data, P.Wxf.data, P.Wxo.data], axis=1)
    Wy = np.concatenate([P.Wyi.data, P.Wyj.data, P.Wyf.data, P.Wyo.data], axis=1)
    b = np.concatenate([P.bi.data, P.bj.data, P.bf.data, P.bo.data])
    x = X.data if mask is None else X.data * mask
    T, B, _ = x.shape

    # input projection for all steps at once
    zx = (x.reshape(T * B, -1) @ Wx).reshape(T, B, 4 * n) + b
    Z = np.empty((T, B, 4 * n))
    G = np.empty((T, B, 4 * n))
    C = np.empty((T + 1, B, n))
    Y = np.empty((T + 1, B, n))
    C[0] = 0.0
    Y[0] = 0.0
    for t in range(T):
        z = zx[t] + Y[t] @ Wy
        Z[t] = z
        g = G[t]
        g[:, :n] = np.tanh(z[:, :n])
        g[:, n:] = hard_sigmoid(z[:, n:])
        C[t + 1] = C[t] * g[:, 2 * n:3 * n] + g[:, :n] * g[:, n:2 * n]
        Y[t + 1] = np.tanh(C[t + 1]) * g[:, 3 * n:]
    out = Y[1:].copy()

    def back(dY):
        dZ = np.empty((T, B, 4 * n))
        dy_rec = np.zeros((B, n))
        dc_rec = np.zeros((B, n))
        WyT = Wy.T
        for t in range(T - 1, -1, -1):
            g = G[t]
            i, j, f, o = g[:, :n], g[:, n:2 * n], g[:, 2 * n:3 * n], g[:, 3 * n:]
            tc = np.tanh(C[t + 1])
            dy = dY[t] + dy_rec
            dc = dc_rec + dy * o * (1.0 - tc * tc)
            dz = dZ[t]
            dz[:, :n] = dc * j * (1.0 - i * i)
            dz[:, n:2 * n] = dc * i
            dz[:, 2 * n:3 * n] = dc * C[t]
            dz[:, 3 * n:] = dy * tc
            dz[:, n:] *= hard_sigmoid_grad(Z[t][:, n:])
            dy_rec = dz @ WyT
            dc_rec = dc * f
        dZ2 = dZ.reshape(T * B, 4 * n)
        dWx = x.reshape(T * B, -1).T @ dZ2
        dWy = Y[:-1].reshape(T * B, n).T @ dZ2
        db = dZ2.sum(axis=0)
        dX = (dZ2 @ Wx.T).reshape(x.shape)
        if mask is not None:
            dX = dX * mask
        parts = [dX]
        parts += [dWx[:, k * n:(k + 1) * n] for k in range(4)]
        parts += [dWy[:, k * n:(k + 1) * n] for k in range(4)]
        parts += [db[k * n:(k + 1) * n] for k in range(4)]
        return tuple(parts)

    parents = (X, P.Wxi, P.Wxj, P.Wxf, P.Wxo, P.Wyi, P.Wyj, P.Wyf, P.Wyo, P.bi, P.bj, P.bf, P.bo)
    return tn._result(out, parents, back, "lstm_layer")
