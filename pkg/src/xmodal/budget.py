"""Parameter-budget allocation for multi-stream architectures.

Unimodal scores, sharpened by an exponent ``k``, set each modality's share
of the baseline's layer widths. A scalar ``alpha`` then scales all widths
until the multi-stream model costs as many parameters as the baseline.
"""

import itertools
import math
from dataclasses import dataclass, field
from types import SimpleNamespace

from .arch import JOINT, ArchitectureSpec, count_params, cross_key, sh_spec, xlstm_spec
from .errors import ContractError, InfeasibleBudgetError
from .features import MODALITIES, MODALITY_DIMS, modality_order

STRATEGIES = ("A", "B", "N", "ALL", "WSL", "CUT")


@dataclass
class ModalityScores:
    scores: dict
    k: float = 1.0

    def __post_init__(self):
        if not self.scores:
            raise ContractError("no modality scores given")
        for m, s in self.scores.items():
            if m not in MODALITIES:
                raise ContractError(f"unknown modality {m!r}")
            if not s > 0:
                raise ContractError(f"score for {m!r} must be positive, got {s}")
        if not self.k >= 0:
            raise ContractError(f"k must be non-negative, got {self.k}")


@dataclass
class AllocationResult:
    spec: ArchitectureSpec
    achieved_params: int
    budget: int
    scale_alpha: float
    weights: dict
    strategy: str = ""
    k: float = 0.0
    within_tolerance: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def relative_gap(self):
        return abs(self.achieved_params - self.budget) / self.budget

    def to_dict(self):
        return {
            **self.spec.to_dict(),
            "accounting": {
                "budget": self.budget,
                "achieved_params": self.achieved_params,
                "k": self.k,
                "strategy": self.strategy,
                "weights": self.weights,
                "scale_alpha": self.scale_alpha,
                "within_tolerance": self.within_tolerance,
            },
        }


def modality_weights(scores):
    """``s_m**k / sum(s**k)``, evaluated in log space."""
    mods = modality_order(scores.scores)
    logs = [scores.k * math.log(scores.scores[m]) for m in mods]
    top = max(logs)
    ex = [math.exp(v - top) for v in logs]
    z = math.fsum(ex)
    return {m: e / z for m, e in zip(mods, ex)}


def _stream_fractions(weights, strategy):
    """Per-stream share of the baseline width, and sharing groups."""
    w = weights
    if strategy in ("A", "B", "N"):
        return dict(w)
    if strategy == "ALL":
        return {m: 1.0 / len(w) for m in w}
    ws = (w["weight"] + w["sleep"]) / 2.0
    if strategy == "WSL":
        return {"weight": ws, "sleep": ws, "steps": w["steps"]}
    # CUT: steps dropped, its share handed to the shared pair
    return {"weight": 0.5, "sleep": 0.5}


def _cross_fractions(weights, rho):
    mods = modality_order(weights)
    pairs = list(itertools.permutations(mods, 2))
    raw = {(a, b): weights[a] * (1.0 - weights[b]) for a, b in pairs}
    z = math.fsum(raw.values())
    return {p: rho * v / z for p, v in raw.items()}


def _widths_at(alpha, fractions, base, cross_frac, integer):
    def width(x):
        return max(1, int(round(x))) if integer else max(1.0, x)

    stream = {m: [width(alpha * f * n) for n in base] for m, f in fractions.items()}
    cross = {}
    if cross_frac:
        n2 = base[1]
        cross = {cross_key(a, b): width(alpha * n2 * f) for (a, b), f in cross_frac.items()}
    return stream, cross


def _variant(strategy):
    return {"A": "xlstm_a", "B": "xlstm_b", "N": "xlstm_n", "ALL": "sh_all", "WSL": "sh_wsl", "CUT": "sh_cut"}[strategy]


def _real_count(strategy, stream, cross, baseline):
    mods = modality_order(stream)
    groups = []
    if strategy == "ALL":
        groups = [mods]
    elif strategy in ("WSL", "CUT"):
        groups = [["weight", "sleep"]]
    shim = SimpleNamespace(
        variant=_variant(strategy),
        modality_input_dims={m: MODALITY_DIMS[m] for m in mods},
        stream_widths=stream,
        cross_widths=cross,
        head_widths=baseline.head_widths,
        static_dim=baseline.static_dim,
        share_groups=groups,
        head_batchnorm=baseline.head_batchnorm,
    )
    return count_params(shim)


def _make_spec(strategy, stream, cross, baseline):
    head = tuple(baseline.head_widths)
    kw = {"static_dim": baseline.static_dim, "head_batchnorm": baseline.head_batchnorm}
    if strategy in ("A", "B", "N"):
        return xlstm_spec(strategy, stream, {tuple(k.split("->")): v for k, v in cross.items()}, head=head, **kw)
    return sh_spec(strategy, stream, head=head, **kw)


def allocate(baseline, scores, strategy, cross_fraction=0.5, tolerance=0.02, max_alpha=4.0):
    """Derive a multi-stream spec whose parameter count matches ``baseline``.

    ``scores`` is a :class:`ModalityScores`; ``strategy`` one of A, B, N
    (cross-modal) or ALL, WSL, CUT (weight sharing).
    """
    strategy = strategy.upper()
    if strategy not in STRATEGIES:
        raise ContractError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if baseline.variant != "lstm" or list(baseline.stream_widths) != [JOINT]:
        raise ContractError("allocation starts from a single-stream lstm baseline")
    base = list(baseline.stream_widths[JOINT])
    if strategy in ("A", "B") and len(base) != 3:
        raise ContractError("cross-connected strategies need a 3-layer baseline")
    budget = count_params(baseline)
    weights = modality_weights(scores)
    missing = set(MODALITIES) - set(weights)
    if missing:
        raise ContractError(f"scores missing for modalities {sorted(missing)}")
    fractions = _stream_fractions(weights, strategy)
    cross_frac = _cross_fractions(weights, cross_fraction) if strategy == "A" else None

    def real_count(alpha):
        stream, cross = _widths_at(alpha, fractions, base, cross_frac, integer=False)
        return _real_count(strategy, stream, cross, baseline)

    if real_count(0.0) > budget:
        raise InfeasibleBudgetError(f"minimum-width {strategy} model exceeds the budget of {budget} parameters")
    hi = max_alpha
    while real_count(hi) < budget:
        hi *= 2.0
        if hi > 1e6:
            raise InfeasibleBudgetError("could not bracket the budget")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if real_count(mid) < budget:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    alpha = 0.5 * (lo + hi)

    stream, cross = _widths_at(alpha, fractions, base, cross_frac, integer=True)
    achieved = _real_count(strategy, stream, cross, baseline)

    # nudge the widest stream's top layer (with its sharing partners) by one
    widest = max(stream, key=lambda m: (stream[m][-1], -MODALITIES.index(m)))
    partners = [widest]
    if strategy == "ALL":
        partners = list(stream)
    elif strategy in ("WSL", "CUT") and widest in ("weight", "sleep"):
        partners = ["weight", "sleep"]
    lo_b, hi_b = budget * (1 - tolerance), budget * (1 + tolerance)
    for _ in range(100000):
        if lo_b <= achieved <= hi_b:
            break
        step = 1 if achieved < lo_b else -1
        if step < 0 and stream[widest][-1] <= 1:
            break
        for m in partners:
            stream[m][-1] += step
        nxt = _real_count(strategy, stream, cross, baseline)
        if step < 0 and nxt < lo_b and abs(nxt - budget) > abs(achieved - budget):
            # overshot the window: undo and stop
            for m in partners:
                stream[m][-1] -= step
            break
        achieved = nxt

    spec = _make_spec(strategy, stream, cross, baseline)
    achieved = count_params(spec)
    return AllocationResult(
        spec=spec,
        achieved_params=achieved,
        budget=budget,
        scale_alpha=alpha,
        weights=weights,
        strategy=strategy,
        k=scores.k,
        within_tolerance=abs(achieved - budget) <= tolerance * budget,
    )


def sweep_k(baseline, scores, strategies, k_values, **kw):
    """One allocation per (k, strategy).

    ``scores`` maps modality -> score. Failed cells hold the exception
    instead of a result so the sweep always completes.
    """
    k_values = list(k_values)
    if not k_values:
        raise ContractError("sweep_k needs at least one k")
    table = {}
    for k in k_values:
        for strategy in strategies:
            try:
                table[(k, strategy)] = allocate(baseline, ModalityScores(dict(scores), k), strategy, **kw)
            except (InfeasibleBudgetError, ContractError) as exc:
                table[(k, strategy)] = exc
    return table
