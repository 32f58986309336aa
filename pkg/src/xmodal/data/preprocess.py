"""Cleaning and labelling of raw per-user records.

A raw record is a JSON object::

    {"user_id": "a1", "height_cm": 171, "gender": 0, "age_band": 3,
     "observed_until": 140,
     "weights": [{"day": 0, "kg": 82.3}, ...],
     "days": [{"day": 0, "light_sleep_min": ..., "steps": ...}, ...],
     "objectives": [{"day": 12, "delta_kg": -4.0}, ...]}

``day`` is an integer day index. ``weights`` may hold several entries per
day. ``days`` carries the sleep and steps fields of a :class:`DayRecord`
(without weight). ``observed_until`` is the last day the user could have
recorded anything; it defaults to the latest day mentioned in the record.

The first valid objective of a user defines the example. Its input sequence
is the run of consecutive recorded days ending at the last recorded day on
or before the objective day. The reference weight is the last weight in that
run, and the target is reference + delta.
"""

import math
from dataclasses import asdict, fields

import numpy as np

from ..errors import EmptyDatasetError, ValidationError
from .schema import MAX_OBJECTIVE_KG, MIN_DAYS, Dataset, DayRecord, Example

HEIGHT_RANGE_CM = (130.0, 225.0)
MAX_RATE_KG_PER_DAY = 1.5
WINDOW_DAYS = 60

_DAY_FIELDS = tuple(f.name for f in fields(DayRecord) if f.name != "weight_kg")


class Rejected(Exception):
    pass


def daily_weights(entries):
    """Map day -> mean of that day's weights."""
    per_day = {}
    for e in entries:
        kg = float(e["kg"])
        if not kg > 0:
            raise Rejected(f"non-positive weight on day {e['day']}")
        per_day.setdefault(int(e["day"]), []).append(kg)
    return {d: float(np.mean(v)) for d, v in sorted(per_day.items())}


def rate_violations(days, kg):
    """Indices i where the change from measurement i to i+1 exceeds the limit."""
    out = []
    for i in range(len(days) - 1):
        if abs(kg[i + 1] - kg[i]) / (days[i + 1] - days[i]) > MAX_RATE_KG_PER_DAY:
            out.append(i)
    return out


def despike(days, kg):
    """Repair a single outlying measurement or reject the series.

    When every violating change touches one measurement, that measurement
    is replaced by the mean of its neighbours. Anything else (or a repair
    that leaves violations behind) counts as a consistent implausible
    change.
    """
    kg = list(kg)
    bad = rate_violations(days, kg)
    if not bad:
        return kg
    common = set.intersection(*({i, i + 1} for i in bad))
    for p in sorted(common):
        nb = [kg[q] for q in (p - 1, p + 1) if 0 <= q < len(kg)]
        fixed = kg[:p] + [float(np.mean(nb))] + kg[p + 1:]
        if not rate_violations(days, fixed):
            return fixed
    raise Rejected(f"weight changes over {MAX_RATE_KG_PER_DAY} kg/day")


def _run_ending_at(record_days, last):
    """Consecutive recorded days ending at ``last``."""
    present = set(record_days)
    start = last
    while start - 1 in present:
        start -= 1
    return list(range(start, last + 1))


def _reached(w, target, delta):
    return w <= target if delta < 0 else w >= target


def preprocess_record(raw, window_days=WINDOW_DAYS):
    """One raw record to an :class:`Example`; raises :class:`Rejected`."""
    try:
        user_id = str(raw["user_id"])
        height = float(raw["height_cm"])
        gender = int(raw["gender"])
        age_band = int(raw["age_band"])
        weights = daily_weights(raw.get("weights", []))
        records = {}
        for d in raw.get("days", []):
            day = int(d["day"])
            records[day] = {k: float(d[k]) for k in _DAY_FIELDS}
        objectives = sorted(
            ((int(o["day"]), float(o["delta_kg"])) for o in raw.get("objectives", [])),
            key=lambda o: o[0],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise Rejected(f"malformed record ({type(exc).__name__}: {exc})") from None

    if not HEIGHT_RANGE_CM[0] <= height <= HEIGHT_RANGE_CM[1]:
        raise Rejected(f"height {height} cm outside {HEIGHT_RANGE_CM}")
    if gender not in (0, 1):
        raise Rejected(f"gender must be 0 or 1, got {gender}")
    if not weights:
        raise Rejected("no weight measurements")

    w_days = list(weights)
    w_kg = despike(w_days, [weights[d] for d in w_days])
    weights = dict(zip(w_days, w_kg))

    valid = [(d, x) for d, x in objectives if 0.0 < abs(x) <= MAX_OBJECTIVE_KG]
    if not valid:
        raise Rejected("no objective within the allowed range")
    d0, delta = valid[0]

    before = [d for d in records if d <= d0]
    if not before:
        raise Rejected("no recorded days before the objective")
    run = _run_ending_at(records, max(before))
    if len(run) < MIN_DAYS:
        raise Rejected(f"only {len(run)} contiguous days before the objective")
    in_run = [weights[d] for d in run if d in weights]
    if not in_run:
        raise Rejected("no weight inside the input sequence")
    target = in_run[-1] + delta

    later = [d for d in w_days if d > d0]
    success_day = next((d for d in later if _reached(weights[d], target, delta)), None)
    conservative_day = next((d for d, x in valid[1:] if d > d0 and abs(x) < abs(delta)), None)
    observed_until = raw.get("observed_until")
    if observed_until is None:
        mentioned = w_days + list(records) + [d for d, _ in objectives]
        observed_until = max(mentioned)
    stopped = w_days[-1] + window_days <= int(observed_until)

    if success_day is not None and (conservative_day is None or success_day <= conservative_day):
        label = True
    elif conservative_day is not None or stopped:
        label = False
    else:
        raise Rejected("outcome undetermined")

    days = []
    for d in run:
        try:
            days.append(DayRecord(**records[d], weight_kg=weights.get(d)))
        except ValidationError as exc:
            raise Rejected(f"day {d}: {exc}") from None
    return Example(
        user_id=user_id, height_cm=height, gender=gender, age_band=age_band,
        objective_kg=delta, days=days, label=label,
    )


def preprocess(raw_records, window_days=WINDOW_DAYS):
    """Clean and label raw records into a :class:`Dataset`.

    Records that cannot be used are listed in ``dataset.rejections`` as
    ``(user_id, reason)`` pairs.
    """
    examples, rejections = [], []
    for i, raw in enumerate(raw_records):
        uid = raw.get("user_id", f"#{i}") if isinstance(raw, dict) else f"#{i}"
        try:
            examples.append(preprocess_record(raw, window_days))
        except Rejected as exc:
            rejections.append((str(uid), str(exc)))
    if not examples:
        raise EmptyDatasetError(f"no usable records ({len(rejections)} rejected)")
    ds = Dataset.from_examples(examples)
    ds.rejections = rejections
    return ds


def lift_example(example, window_days=WINDOW_DAYS):
    """A raw record that :func:`preprocess` maps back to ``example``."""
    T = len(example.days)
    weights = [{"day": d, "kg": r.weight_kg} for d, r in enumerate(example.days) if r.weight_kg is not None]
    days = []
    for d, r in enumerate(example.days):
        row = asdict(r)
        row.pop("weight_kg")
        days.append({"day": d, **row})
    d0 = T - 1
    delta = example.objective_kg
    if example.label:
        target = weights[-1]["kg"] + delta
        # far enough out that the jump stays under the rate limit
        reach_day = d0 + math.ceil(abs(delta)) + 1
        weights.append({"day": reach_day, "kg": target})
        observed_until = reach_day
    else:
        observed_until = weights[-1]["day"] + window_days
    return {
        "user_id": example.user_id,
        "height_cm": example.height_cm,
        "gender": example.gender,
        "age_band": example.age_band,
        "observed_until": observed_until,
        "weights": weights,
        "days": days,
        "objectives": [{"day": d0, "delta_kg": delta}],
    }
