"""Synthetic multimodal fitness data with a planted success signal.

Each user gets a latent weight trend, steps trend and typical time to fall
asleep. The success label is drawn from a logistic model on those drivers
(plus objective magnitude), with the intercept calibrated to a target
positive rate. ``signal_strength`` scales every driver coefficient, so at
zero the labels are independent of the features.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..rng import Rng
from .schema import Dataset, DayRecord, Example

DRIVERS = ("weight_trend", "steps_trend", "sleep_latency", "objective")


@dataclass
class SyntheticConfig:
    n_users: int = 1000
    T_range: tuple = (10, 30)
    signal_strength: float = 1.0
    seed: int = 0
    positive_rate: float = 0.35
    # per-driver logit coefficient (per standard deviation of the driver)
    coefs: dict = field(default_factory=lambda: {
        "weight_trend": 1.2, "steps_trend": 1.2, "sleep_latency": 2.5, "objective": 2.0,
    })
    # steps modality carries no label information when True
    steps_noise_only: bool = False
    weight_slope_sd: float = 0.3  # kg/day, across users
    bmi_sd: float = 3.0

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        lo, hi = self.T_range
        if lo < 10 or hi < lo:
            raise ValueError("T_range must satisfy 10 <= lo <= hi")
        self.T_range = (int(lo), int(hi))
        unknown = set(self.coefs) - set(DRIVERS)
        if unknown:
            raise ValueError(f"unknown drivers {sorted(unknown)}")

    def to_dict(self):
        d = asdict(self)
        d["T_range"] = list(self.T_range)
        return d


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def calibrate_intercept(signal, rate, tol=1e-12):
    """Intercept b with mean(sigmoid(signal + b)) == rate (bisection)."""
    lo, hi = -50.0, 50.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _sigmoid(signal + mid).mean() < rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _users(cfg, rng):
    n = cfg.n_users
    r = rng.child("statics")
    gender = r.integers(0, 2, size=n)
    height = np.clip(np.where(gender == 1, 176.0, 163.0) + r.normal(0, 7.0, n), 135.0, 220.0)
    age_band = r.integers(0, 7, size=n)
    bmi = np.clip(r.normal(28.0, cfg.bmi_sd, n), 18.0, 45.0)
    w0 = bmi * (height / 100.0) ** 2
    losing = r.random(n) < 0.85
    mag = np.where(losing, r.generator.gamma(2.0, 2.0, n), r.generator.gamma(2.0, 1.0, n))
    mag = np.clip(mag, 0.5, 19.5)
    objective = np.round(np.where(losing, -mag, mag), 1)

    r = rng.child("latent")
    weight_slope = r.normal(-0.05, cfg.weight_slope_sd, n)  # kg/day
    steps_base = np.exp(r.normal(np.log(7000.0), 0.35, n))
    steps_slope = r.normal(0.0, 120.0, n)  # steps/day
    latency = r.generator.gamma(3.0, 6.0, n)  # minutes
    T = r.integers(cfg.T_range[0], cfg.T_range[1] + 1, size=n)
    return dict(
        gender=gender, height=height, age_band=age_band, w0=w0, objective=objective,
        weight_slope=weight_slope, steps_base=steps_base, steps_slope=steps_slope,
        latency=latency, T=T,
    )


def _labels(cfg, u, rng):
    drivers = {
        "weight_trend": -u["weight_slope"],
        "steps_trend": u["steps_slope"],
        "sleep_latency": -u["latency"],
        "objective": -np.abs(u["objective"]),
    }
    signal = np.zeros(cfg.n_users)
    for name, x in drivers.items():
        c = cfg.coefs.get(name, 0.0)
        if name == "steps_trend" and cfg.steps_noise_only:
            c = 0.0
        sd = x.std()
        if c and sd > 0:
            signal += c * (x - x.mean()) / sd
    signal *= cfg.signal_strength
    b = calibrate_intercept(signal, cfg.positive_rate)
    p = _sigmoid(signal + b)
    return rng.child("labels").random(cfg.n_users) < p


def _days(u, i, rng):
    T = int(u["T"][i])
    t = np.arange(T, dtype=np.float64)
    weight = u["w0"][i] + u["weight_slope"][i] * t + rng.normal(0, 0.25, T)
    steps = np.maximum(0.0, u["steps_base"][i] + u["steps_slope"][i] * (t - (T - 1) / 2) + rng.normal(0, 0.12 * u["steps_base"][i], T))
    latency = np.clip(u["latency"][i] + rng.normal(0, 4.0, T), 0.0, 240.0)
    light = np.clip(rng.normal(240.0, 35.0, T), 0.0, 600.0)
    deep = np.clip(rng.normal(90.0, 20.0, T), 0.0, 300.0)
    awake = np.clip(rng.normal(30.0, 10.0, T), 0.0, 240.0)
    wakeups = rng.generator.poisson(2.0, T).astype(np.float64)
    wake_lat = np.clip(rng.generator.gamma(2.0, 5.0, T), 0.0, 240.0)
    bed_in = np.clip(rng.normal(1380.0, 30.0, T), 0.0, 1440.0)
    bed_out = np.clip(rng.normal(420.0, 35.0, T), 0.0, 1440.0)
    return [
        DayRecord(
            light_sleep_min=round(float(light[d]), 2),
            deep_sleep_min=round(float(deep[d]), 2),
            sleep_latency_min=round(float(latency[d]), 2),
            awake_min=round(float(awake[d]), 2),
            n_wakeups=float(wakeups[d]),
            wakeup_latency_min=round(float(wake_lat[d]), 2),
            bed_in_min=round(float(bed_in[d]), 2),
            bed_out_min=round(float(bed_out[d]), 2),
            steps=float(round(steps[d])),
            weight_kg=round(float(weight[d]), 3),
        )
        for d in range(T)
    ]


def generate_examples(cfg):
    rng = Rng(cfg.seed).child("synthetic")
    u = _users(cfg, rng)
    labels = _labels(cfg, u, rng)
    day_rng = rng.child("days")
    examples = []
    for i in range(cfg.n_users):
        examples.append(Example(
            user_id=f"u{i:05d}",
            height_cm=round(float(u["height"][i]), 1),
            gender=int(u["gender"][i]),
            age_band=int(u["age_band"][i]),
            objective_kg=float(u["objective"][i]),
            days=_days(u, i, day_rng.child(i)),
            label=bool(labels[i]),
        ))
    return examples


def generate_synthetic(cfg):
    """Deterministic synthetic :class:`Dataset` for ``cfg``."""
    if isinstance(cfg, dict):
        cfg = SyntheticConfig(**cfg)
    return Dataset.from_examples(generate_examples(cfg))


def driver_summaries(dataset):
    """Observable per-user summaries of the planted drivers.

    Least-squares weight and steps slopes and mean sleep latency, taken from
    the physical day matrices. Used as the features of a learnability oracle.
    """
    rows = []
    for seq in dataset.seqs:
        t = np.arange(len(seq), dtype=np.float64)
        t -= t.mean()
        denom = (t * t).sum()
        rows.append([
            (t * seq[:, 0]).sum() / denom,
            (t * seq[:, 9]).sum() / denom,
            seq[:, 3].mean(),
        ])
    return np.array(rows)
