"""Adam with bias correction."""

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params, grads, state, hyper, t):
    """One in-place Adam update of ``params`` (arrays) at step ``t >= 1``.

    ``state`` is a dict holding the lists ``m`` and ``v``; it is created on
    first use.
    """
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    if "m" not in state:
        state["m"] = [np.zeros_like(p) for p in params]
        state["v"] = [np.zeros_like(p) for p in params]
    b1, b2 = hyper.beta1, hyper.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state["m"], state["v"]):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= hyper.lr * (m / c1) / (np.sqrt(v / c2) + hyper.eps)
    return params, state


class Adam:
    def __init__(self, tensors, hyper=None):
        self.tensors = list(tensors)
        self.hyper = hyper or AdamConfig()
        self.state = {}
        self.t = 0

    def step(self):
        self.t += 1
        grads = [np.zeros_like(p.data) if p.grad is None else p.grad for p in self.tensors]
        adam_step([p.data for p in self.tensors], grads, self.state, self.hyper, self.t)

    def zero_grad(self):
        for p in self.tensors:
            p.zero_grad()
