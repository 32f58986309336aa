"""From raw per-user logs to labelled examples.

A raw record holds the user's profile, scale readings, daily sleep/steps
rows and the weight objectives they set. Preprocessing averages same-day
readings, repairs an isolated spike, keeps the contiguous days before the
objective and decides success or failure from what happened afterwards.

    python demos/preprocess_raw.py
"""

from xmodal.data import preprocess

day = dict(
    light_sleep_min=240.0, deep_sleep_min=90.0, sleep_latency_min=15.0, awake_min=30.0, n_wakeups=2.0,
    wakeup_latency_min=10.0, bed_in_min=1380.0, bed_out_min=420.0, steps=8000.0,
)


def user(uid, weights, later, objectives, observed_until=None, height=172.0):
    r = {
        "user_id": uid, "height_cm": height, "gender": 1, "age_band": 2,
        "weights": [{"day": d, "kg": kg} for d, kg in enumerate(weights)] + [{"day": d, "kg": kg} for d, kg in later],
        "days": [{"day": d, **day} for d in range(len(weights))],
        "objectives": [{"day": d, "delta_kg": x} for d, x in objectives],
    }
    if observed_until is not None:
        r["observed_until"] = observed_until
    return r


steady = [85.0 - 0.1 * d for d in range(12)]
spiky = list(steady)
spiky[5] = 91.0  # someone weighed in wearing boots

raw = [
    user("reached", steady, [(30, 80.5)], [(11, -3.0)]),
    user("spike", spiky, [(30, 80.5)], [(11, -3.0)]),
    user("gave_up", steady, [(20, 83.5)], [(11, -3.0), (25, -1.0)]),
    user("went_quiet", steady, [(15, 83.8)], [(11, -3.0)], observed_until=120),
    user("too_short", steady[:6], [(30, 80.0)], [(5, -3.0)]),
    user("tall", steady, [(30, 80.0)], [(11, -3.0)], height=240.0),
    user("still_trying", steady, [(15, 83.8)], [(11, -3.0)], observed_until=40),
]

ds = preprocess(raw, window_days=60)
for e in ds.examples:
    w = [d.weight_kg for d in e.days]
    print(f"{e.user_id:>12}: {len(e.days)} days, objective {e.objective_kg:+.1f} kg, "
          f"success={e.label}, weight {w[0]:.1f}..{w[-1]:.1f} (max {max(w):.1f})")
for uid, reason in ds.rejections:
    print(f"{uid:>12}: rejected ({reason})")
