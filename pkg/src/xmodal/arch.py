"""Declarative architecture descriptions and exact parameter counting."""

import itertools
import json
from dataclasses import asdict, dataclass, field

from .errors import ValidationError
from .features import MODALITIES, MODALITY_DIMS, modality_order

VARIANTS = ("lstm", "xlstm_a", "xlstm_b", "xlstm_n", "sh_all", "sh_wsl", "sh_cut", "dnn")
XLSTM = ("xlstm_a", "xlstm_b", "xlstm_n")
SHARED = ("sh_all", "sh_wsl", "sh_cut")
JOINT = "joint"


def cross_key(src, dst):
    return f"{src}->{dst}"


def parse_cross_key(key):
    src, _, dst = key.partition("->")
    return src, dst


@dataclass
class ArchitectureSpec:
    variant: str
    modality_input_dims: dict = field(default_factory=lambda: dict(MODALITY_DIMS))
    stream_widths: dict = field(default_factory=dict)
    cross_widths: dict = field(default_factory=dict)
    head_widths: list = field(default_factory=lambda: [128, 64, 1])
    static_dim: int = 4
    share_groups: list = field(default_factory=list)
    dnn_window: int = 10
    dnn_hidden: list = field(default_factory=lambda: [120] * 5)
    head_batchnorm: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def modalities(self):
        return modality_order(self.modality_input_dims)

    @property
    def streams(self):
        if self.variant == "lstm":
            return [JOINT]
        if self.variant == "dnn":
            return []
        return self.modalities

    @property
    def depth(self):
        return len(next(iter(self.stream_widths.values()))) if self.stream_widths else 0

    def validate(self):
        v = self.variant
        if v not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {v!r}", "variant")
        if not self.modality_input_dims:
            raise ValidationError("at least one modality is required", "modality_input_dims")
        for m, d in self.modality_input_dims.items():
            if m not in MODALITIES:
                raise ValidationError(f"unknown modality {m!r}", "modality_input_dims")
            if d != MODALITY_DIMS[m]:
                raise ValidationError(
                    f"modality {m!r} has {MODALITY_DIMS[m]} input features, spec says {d}",
                    "modality_input_dims",
                )
        _check_widths(self.head_widths, "head_widths")
        if self.head_widths[-1] != 1:
            raise ValidationError("the last head layer must have width 1", "head_widths")
        if not isinstance(self.static_dim, int) or self.static_dim < 0:
            raise ValidationError("static_dim must be a non-negative integer", "static_dim")

        if v == "dnn":
            if self.stream_widths:
                raise ValidationError("dnn has no recurrent streams", "stream_widths")
            _check_widths(self.dnn_hidden, "dnn_hidden")
            _check_widths([self.dnn_window], "dnn_window")
        else:
            expected = set(self.streams)
            if set(self.stream_widths) != expected:
                raise ValidationError(
                    f"{v} needs stream widths for exactly {sorted(expected)}, got {sorted(self.stream_widths)}",
                    "stream_widths",
                )
            depths = set()
            for name, ws in self.stream_widths.items():
                _check_widths(ws, "stream_widths")
                depths.add(len(ws))
            if len(depths) != 1:
                raise ValidationError("all streams must have the same depth", "stream_widths")
            if v in ("xlstm_a", "xlstm_b") and depths != {3}:
                raise ValidationError(f"{v} needs exactly 3 layers per stream", "stream_widths")
            if v in XLSTM + SHARED and len(self.modalities) < 2 and v != "xlstm_n":
                raise ValidationError(f"{v} needs at least two modalities", "modality_input_dims")

        if v == "xlstm_a":
            pairs = {cross_key(a, b) for a, b in itertools.permutations(self.modalities, 2)}
            if set(self.cross_widths) != pairs:
                raise ValidationError(
                    f"xlstm_a needs cross widths for all ordered pairs {sorted(pairs)}", "cross_widths"
                )
            _check_widths(list(self.cross_widths.values()), "cross_widths")
        elif self.cross_widths:
            raise ValidationError(f"{v} takes no cross widths", "cross_widths")

        if v in SHARED:
            self._validate_sharing()
        elif self.share_groups:
            raise ValidationError(f"{v} takes no share groups", "share_groups")

    def _validate_sharing(self):
        v, mods = self.variant, self.modalities
        groups = [modality_order(g) for g in self.share_groups]
        seen = set()
        for g in groups:
            if len(g) < 2:
                raise ValidationError("a share group needs at least two modalities", "share_groups")
            for m in g:
                if m not in mods or m in seen:
                    raise ValidationError(f"share group member {m!r} is unknown or repeated", "share_groups")
                seen.add(m)
            for m in g[1:]:
                if list(self.stream_widths[m]) != list(self.stream_widths[g[0]]):
                    raise ValidationError(
                        "modalities sharing recurrent weights need equal widths at every depth",
                        "stream_widths",
                    )
        if v == "sh_all" and (len(groups) != 1 or set(groups[0]) != set(mods)):
            raise ValidationError("sh_all shares one group across all modalities", "share_groups")
        if v == "sh_wsl" and (groups != [["weight", "sleep"]] or "steps" not in mods):
            raise ValidationError("sh_wsl shares weight/sleep and keeps an independent steps stream", "share_groups")
        if v == "sh_cut" and (groups != [["weight", "sleep"]] or "steps" in mods):
            raise ValidationError("sh_cut shares weight/sleep and drops steps", "share_groups")

    def share_group_of(self, modality):
        for i, g in enumerate(self.share_groups):
            if modality in g:
                return i
        return None

    # ------------------------------------------------------------------ json

    def to_dict(self):
        d = asdict(self)
        d["modality_input_dims"] = {m: d["modality_input_dims"][m] for m in self.modalities}
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown architecture fields {sorted(extra)}", sorted(extra)[0])
        if "variant" not in d:
            raise ValidationError("missing field 'variant'", "variant")
        kw = dict(d)
        if "stream_widths" in kw:
            kw["stream_widths"] = {k: list(v) for k, v in kw["stream_widths"].items()}
        if "share_groups" in kw:
            kw["share_groups"] = [list(g) for g in kw["share_groups"]]
        return cls(**kw)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_widths(ws, name):
    if not isinstance(ws, (list, tuple)) or not ws:
        raise ValidationError(f"{name} must be a non-empty list of widths", name)
    for w in ws:
        if isinstance(w, bool) or not isinstance(w, int) or w < 1:
            raise ValidationError(f"{name} entries must be integers >= 1, got {w!r}", name)


# ------------------------------------------------------------ constructors

def lstm_spec(widths=(21, 42, 84), modalities=MODALITIES, head=(128, 64, 1), **kw):
    dims = {m: MODALITY_DIMS[m] for m in modalities}
    return ArchitectureSpec("lstm", dims, {JOINT: list(widths)}, head_widths=list(head), **kw)


def xlstm_spec(strategy, widths, cross=None, head=(128, 64, 1), **kw):
    """``widths`` maps modality -> per-layer widths; ``cross`` maps (src, dst) -> width."""
    variant = {"A": "xlstm_a", "B": "xlstm_b", "N": "xlstm_n"}[strategy.upper()]
    dims = {m: MODALITY_DIMS[m] for m in modality_order(widths)}
    cw = {}
    if variant == "xlstm_a":
        cw = {cross_key(*k) if isinstance(k, tuple) else k: v for k, v in (cross or {}).items()}
    return ArchitectureSpec(
        variant, dims, {m: list(w) for m, w in widths.items()}, cw, head_widths=list(head), **kw
    )


def sh_spec(mode, widths, head=(128, 64, 1), **kw):
    """Weight-sharing spec. ``widths`` maps modality -> per-layer widths."""
    mode = mode.upper()
    variant = {"ALL": "sh_all", "WSL": "sh_wsl", "CUT": "sh_cut"}[mode]
    mods = modality_order(widths)
    groups = [mods] if mode == "ALL" else [["weight", "sleep"]]
    dims = {m: MODALITY_DIMS[m] for m in mods}
    return ArchitectureSpec(
        variant, dims, {m: list(widths[m]) for m in mods}, head_widths=list(head), share_groups=groups, **kw
    )


def dnn_spec(window=10, hidden=(120,) * 5, head=(128, 64, 1), **kw):
    return ArchitectureSpec("dnn", head_widths=list(head), dnn_window=window, dnn_hidden=list(hidden), **kw)


# ---------------------------------------------------------------- counting

@dataclass(frozen=True)
class LayerPlan:
    name: str
    d_in: float
    d_out: float
    share: str = None  # key of the shared recurrent block, if any


def lstm_plan(spec_like):
    """Ordered LSTM layers of a spec.

    Accepts anything with the ArchitectureSpec attributes, including
    unvalidated objects carrying real-valued widths (used by the allocator).
    """
    s = spec_like
    v = s.variant
    dims = s.modality_input_dims
    sw = s.stream_widths
    plan = []
    if v == "lstm":
        d_in = sum(dims.values())
        for li, w in enumerate(sw[JOINT]):
            plan.append(LayerPlan(f"{JOINT}.l{li + 1}", d_in, w))
            d_in = w
        return plan
    if v == "dnn":
        return plan
    mods = modality_order(dims)
    if v in ("xlstm_n",) + SHARED:
        for m in mods:
            d_in = dims[m]
            gi = _group_index(s, m) if v in SHARED else None
            for li, w in enumerate(sw[m]):
                share = None if gi is None else f"g{gi}.l{li + 1}"
                plan.append(LayerPlan(f"{m}.l{li + 1}", d_in, w, share))
                d_in = w
        return plan
    # xlstm_a / xlstm_b
    for m in mods:
        plan.append(LayerPlan(f"{m}.l1", dims[m], sw[m][0]))
    for m in mods:
        plan.append(LayerPlan(f"{m}.l2", sw[m][0], sw[m][1]))
    if v == "xlstm_a":
        for src, dst in itertools.permutations(mods, 2):
            k = cross_key(src, dst)
            plan.append(LayerPlan(f"cross.{k}", sw[src][0], s.cross_widths[k]))
    for m in mods:
        others = [o for o in mods if o != m]
        if v == "xlstm_a":
            extra = sum(s.cross_widths[cross_key(o, m)] for o in others)
        else:
            extra = sum(sw[o][0] for o in others)
        plan.append(LayerPlan(f"{m}.l3", sw[m][1] + extra, sw[m][2]))
    return plan


def _group_index(s, m):
    for i, g in enumerate(s.share_groups):
        if m in g:
            return i
    return None


def trunk_width(spec_like):
    s = spec_like
    if s.variant == "dnn":
        return s.dnn_hidden[-1]
    return sum(ws[-1] for ws in s.stream_widths.values())


def dense_plan(spec_like):
    """(d_in, d_out) of every fully-connected layer, DNN trunk first."""
    s = spec_like
    layers = []
    if s.variant == "dnn":
        d = s.dnn_window * sum(s.modality_input_dims.values())
        for h in s.dnn_hidden:
            layers.append((d, h))
            d = h
    d = trunk_width(s) + s.static_dim
    for h in s.head_widths:
        layers.append((d, h))
        d = h
    return layers


def count_params(spec_like):
    """Number of distinct trainable scalars; shared recurrent blocks count once."""
    s = spec_like
    total = 0
    shared_seen = set()
    for layer in lstm_plan(s):
        total += 4 * (layer.d_in * layer.d_out + layer.d_out)
        if layer.share is None or layer.share not in shared_seen:
            total += 4 * layer.d_out * layer.d_out
            if layer.share is not None:
                shared_seen.add(layer.share)
    for d_in, d_out in dense_plan(s):
        total += d_in * d_out + d_out
    if getattr(s, "head_batchnorm", False):
        total += 2 * sum(s.head_widths[:-1])
    return total
