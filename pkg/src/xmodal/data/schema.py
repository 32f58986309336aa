"""Record types and the array-backed :class:`Dataset`."""

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..errors import ValidationError
from ..features import SEQ_FEATURES, STATIC_FEATURES

MIN_DAYS = 10
MAX_OBJECTIVE_KG = 20.0
MINUTE_FIELDS = (
    "light_sleep_min",
    "deep_sleep_min",
    "sleep_latency_min",
    "awake_min",
    "wakeup_latency_min",
    "bed_in_min",
    "bed_out_min",
)


@dataclass
class DayRecord:
    light_sleep_min: float
    deep_sleep_min: float
    sleep_latency_min: float
    awake_min: float
    n_wakeups: float
    wakeup_latency_min: float
    bed_in_min: float
    bed_out_min: float
    steps: float
    weight_kg: float = None

    def __post_init__(self):
        for name in MINUTE_FIELDS:
            v = getattr(self, name)
            if not 0.0 <= v <= 1440.0:
                raise ValidationError(f"{name} must lie in [0, 1440], got {v}", name)
        if self.n_wakeups < 0:
            raise ValidationError("n_wakeups must be non-negative", "n_wakeups")
        if self.steps < 0:
            raise ValidationError("steps must be non-negative", "steps")
        if self.weight_kg is not None and not self.weight_kg > 0:
            raise ValidationError(f"weight_kg must be positive, got {self.weight_kg}", "weight_kg")

    def as_row(self):
        return [np.nan if getattr(self, f) is None else float(getattr(self, f)) for f in SEQ_FEATURES]

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        missing = [n for n in names if n != "weight_kg" and n not in d]
        if missing:
            raise ValidationError(f"day record missing {sorted(missing)}", sorted(missing)[0])
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class Example:
    user_id: str
    height_cm: float
    gender: int
    age_band: int
    objective_kg: float
    days: list
    label: bool

    def __post_init__(self):
        if len(self.days) < MIN_DAYS:
            raise ValidationError(f"an example needs at least {MIN_DAYS} days, got {len(self.days)}", "days")
        if abs(self.objective_kg) > MAX_OBJECTIVE_KG:
            raise ValidationError(f"|objective_kg| must be <= {MAX_OBJECTIVE_KG}", "objective_kg")
        if self.gender not in (0, 1):
            raise ValidationError("gender must be 0 or 1", "gender")

    def to_dict(self):
        return {
            "user_id": self.user_id,
            "height_cm": self.height_cm,
            "gender": self.gender,
            "age_band": self.age_band,
            "objective_kg": self.objective_kg,
            "achieved": bool(self.label),
            "days": [asdict(d) for d in self.days],
        }

    @classmethod
    def from_dict(cls, d):
        for key in ("user_id", "height_cm", "gender", "age_band", "objective_kg", "achieved", "days"):
            if key not in d:
                raise ValidationError(f"example missing field {key!r}", key)
        return cls(
            user_id=str(d["user_id"]),
            height_cm=float(d["height_cm"]),
            gender=int(d["gender"]),
            age_band=int(d["age_band"]),
            objective_kg=float(d["objective_kg"]),
            days=[DayRecord.from_dict(x) for x in d["days"]],
            label=bool(d["achieved"]),
        )

    def day_matrix(self):
        """(T, 10) physical features; missing weights are carried forward/back."""
        m = np.array([d.as_row() for d in self.days], dtype=np.float64)
        w = m[:, 0]
        known = np.flatnonzero(~np.isnan(w))
        if known.size == 0:
            raise ValidationError(f"example {self.user_id!r} has no weight measurement", "weight_kg")
        idx = np.maximum.accumulate(np.where(~np.isnan(w), np.arange(len(w)), 0))
        idx[: known[0]] = known[0]
        m[:, 0] = w[idx]
        return m

    def static_row(self):
        return [self.height_cm, float(self.gender), float(self.age_band), self.objective_kg]


@dataclass
class NormStats:
    """Per-feature (mean, std) for day features and z-scored statics."""

    mean: dict
    std: dict

    def to_dict(self):
        return {k: {"mean": self.mean[k], "std": self.std[k]} for k in self.mean}

    @classmethod
    def from_dict(cls, d):
        return cls({k: float(v["mean"]) for k, v in d.items()}, {k: float(v["std"]) for k, v in d.items()})

    def seq_arrays(self):
        return (
            np.array([self.mean[f] for f in SEQ_FEATURES]),
            np.array([self.std[f] for f in SEQ_FEATURES]),
        )

    def static_arrays(self):
        mu = np.array([self.mean.get(f, 0.0) for f in STATIC_FEATURES])
        sd = np.array([self.std.get(f, 1.0) for f in STATIC_FEATURES])
        return mu, sd

    def normalize_seq(self, seq):
        mu, sd = self.seq_arrays()
        return (np.asarray(seq, dtype=np.float64) - mu) / sd

    def denormalize_seq(self, z):
        mu, sd = self.seq_arrays()
        return np.asarray(z, dtype=np.float64) * sd + mu

    def normalize_statics(self, statics):
        mu, sd = self.static_arrays()
        return (np.asarray(statics, dtype=np.float64) - mu) / sd


@dataclass
class Dataset:
    """Array form of a list of examples.

    ``seqs[i]`` is the ``(T_i, 10)`` day matrix, ``statics`` is ``(N, 4)``.
    ``objectives_kg`` always holds the physical objective, even after
    normalisation, for per-objective breakdowns.
    """

    seqs: list
    statics: np.ndarray
    labels: np.ndarray
    user_ids: list
    objectives_kg: np.ndarray
    stats: NormStats = None
    examples: list = None
    rejections: list = field(default_factory=list)

    def __len__(self):
        return len(self.seqs)

    @classmethod
    def from_examples(cls, examples):
        examples = list(examples)
        return cls(
            seqs=[e.day_matrix() for e in examples],
            statics=np.array([e.static_row() for e in examples], dtype=np.float64).reshape(-1, len(STATIC_FEATURES)),
            labels=np.array([int(e.label) for e in examples], dtype=np.int64),
            user_ids=[e.user_id for e in examples],
            objectives_kg=np.array([e.objective_kg for e in examples], dtype=np.float64),
            examples=examples,
        )

    def subset(self, indices):
        idx = [int(i) for i in indices]
        return Dataset(
            seqs=[self.seqs[i] for i in idx],
            statics=self.statics[idx],
            labels=self.labels[idx],
            user_ids=[self.user_ids[i] for i in idx],
            objectives_kg=self.objectives_kg[idx],
            stats=self.stats,
            examples=None if self.examples is None else [self.examples[i] for i in idx],
        )

    @property
    def lengths(self):
        return np.array([len(s) for s in self.seqs], dtype=np.int64)


# ---------------------------------------------------------------- json lines

def write_jsonl(examples, path, provenance=None):
    with open(path, "w") as fh:
        if provenance is not None:
            fh.write(json.dumps({"_provenance": provenance}, sort_keys=True) + "\n")
        for e in examples:
            fh.write(json.dumps(e.to_dict()) + "\n")


def read_jsonl(path):
    """Examples from a JSON-lines file; provenance header lines are skipped."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})", "jsonl") from None
            if "_provenance" in d:
                continue
            out.append(Example.from_dict(d))
    return out
