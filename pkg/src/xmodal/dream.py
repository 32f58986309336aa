"""Dream sequences: inputs that maximise a trained model's confidence.

Starting from the all-zero normalised sequence, gradient ascent climbs

    J(I) = s * logit(I) - lam * ||I||^2

with s = +1 for success and -1 for failure. The logit is used rather than
the probability because the sigmoid saturates and its gradient vanishes;
both have the same maximiser. Statics stay fixed.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as tn
from .data.schema import NormStats
from .errors import ContractError, ValidationError
from .features import SEQ_FEATURES, STATIC_FEATURES

GRAD_TOL = 1e-6
MAX_HALVINGS = 60


@dataclass
class DreamConfig:
    target: str = "success"
    T: int = 10
    lam: float = 5.0
    step_size: float = 0.05
    max_iters: int = 2000
    # physical statics; normalised with the model's stats before use
    statics: dict = field(default_factory=lambda: {
        "height_cm": 170.0, "gender": 0, "age_band": 3, "objective_kg": -4.0,
    })
    # the ascent is deterministic; the seed is kept for provenance only
    seed: int = 0

    def __post_init__(self):
        if self.target not in ("success", "failure"):
            raise ValidationError("target must be 'success' or 'failure'", "target")
        if self.T < 1:
            raise ValidationError("T must be >= 1", "T")
        if self.lam < 0:
            raise ValidationError("lam must be >= 0", "lam")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1", "max_iters")
        if not self.step_size > 0:
            raise ValidationError("step_size must be positive", "step_size")
        missing = [f for f in STATIC_FEATURES if f not in self.statics]
        if missing:
            raise ValidationError(f"statics missing {missing}", "statics")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


@dataclass
class DreamResult:
    sequence: np.ndarray  # (T, 10), normalised features
    objective_trace: list  # J after every accepted step, starting at I0
    final_confidence: float  # model probability of success (nan for a bare callable)
    final_logit: float
    iterations: int
    status: str  # "converged", "max_iters", "stalled" or "non-finite"

    def to_dict(self):
        d = asdict(self)
        d["sequence"] = self.sequence.tolist()
        return d


def model_scorer(model, statics, T):
    """Callable mapping a ``(T, 10)`` tensor to the model's scalar logit."""
    row = np.array([float(statics[f]) for f in STATIC_FEATURES])
    if model.stats is not None:
        row = NormStats.from_dict(model.stats).normalize_statics(row)
    row = row[None, :]

    def score(I):
        return tn.reshape(model.logits(tn.reshape(I, (T, 1, len(SEQ_FEATURES))), row), ())

    return score


def dream(model, cfg):
    """Gradient ascent with backtracking on the penalised target logit.

    ``model`` is a :class:`~xmodal.model.Model` or any callable taking a
    ``(T, 10)`` Tensor to a scalar Tensor logit. A step is accepted only if
    J strictly improves; otherwise the step size is halved.
    """
    score = model_scorer(model, cfg.statics, cfg.T) if hasattr(model, "logits") else model
    sign = 1.0 if cfg.target == "success" else -1.0

    def evaluate(x):
        I = tn.Tensor(x, requires_grad=True)
        logit = score(I)
        J = tn.sub(tn.mul(logit, sign), tn.mul(tn.sum(tn.mul(I, I)), cfg.lam))
        return J, logit, I

    x = np.zeros((cfg.T, len(SEQ_FEATURES)))
    J, logit, I = evaluate(x)
    if not math.isfinite(J.item()):
        return _result(x, [], logit, 0, "non-finite", model)
    trace = [J.item()]
    eta = cfg.step_size
    status = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        (g,) = tn.gradients(J, [I])
        if float(np.linalg.norm(g)) < GRAD_TOL:
            status = "converged"
            it -= 1
            break
        for _ in range(MAX_HALVINGS):
            cand = x + eta * g
            J_new, logit_new, I_new = evaluate(cand)
            value = J_new.item()
            if not math.isfinite(value):
                return _result(x, trace, logit, it - 1, "non-finite", model)
            if value > trace[-1]:
                break
            eta *= 0.5
        else:
            status = "stalled"
            it -= 1
            break
        x, J, logit, I = cand, J_new, logit_new, I_new
        trace.append(value)
    return _result(x, trace, logit, it, status, model)


def _result(x, trace, logit, iterations, status, model):
    z = float(logit.item())
    conf = float(tn.logistic(np.array(z))) if hasattr(model, "logits") else math.nan
    return DreamResult(
        sequence=x, objective_trace=trace, final_confidence=conf,
        final_logit=z, iterations=iterations, status=status,
    )


def denormalize(result, stats):
    if stats is None:
        raise ContractError("exporting a dream needs the model's normalisation stats")
    if isinstance(stats, dict):
        stats = NormStats.from_dict(stats)
    return stats.denormalize_seq(result.sequence)


def export_dream(result, stats, path=None):
    """CSV of the dream in physical units: date_index plus the 10 day features."""
    phys = denormalize(result, stats)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date_index", *SEQ_FEATURES])
    for d, row in enumerate(phys):
        w.writerow([d, *(repr(float(v)) for v in row)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
