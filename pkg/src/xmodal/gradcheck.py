"""Central finite-difference gradient checking."""

import numpy as np

from .tensor import backward


def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def numeric_grad(f, params, eps=1e-5):
    """Central differences of the scalar ``f()`` w.r.t. each tensor in ``params``.

    ``f`` is re-evaluated with the parameters perturbed in place and must
    therefore be a pure function of their current values.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(f())
            flat[i] = orig - eps
            fm = float(f())
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * eps)
        grads.append(g)
    return grads


def analytic_grad(loss_fn, params):
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    backward(loss)
    return [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]


def tensor_relative_error(analytic, numeric):
    """||a - n|| / max(||a||, ||n||) over a whole parameter tensor."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-8)
    return float(np.linalg.norm(a - n) / denom)


def finite_diff_check(loss_fn, params, eps=1e-4, elementwise=False):
    """Max relative error between reverse-mode and central-difference gradients.

    ``loss_fn`` builds a scalar Tensor from the current parameter values. By
    default the error is measured per parameter tensor. Entry-wise errors
    (``elementwise=True``) are dominated by rounding noise wherever a single
    gradient entry is tiny.
    """
    params = list(params)
    analytic = analytic_grad(loss_fn, params)
    numeric = numeric_grad(lambda: loss_fn().item(), params, eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        if not a.size:
            continue
        err = float(relative_error(a, n).max()) if elementwise else tensor_relative_error(a, n)
        worst = max(worst, err)
    return worst
