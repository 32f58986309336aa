"""Column layout of the per-day feature matrix and the static vector."""

SEQ_FEATURES = (
    "weight_kg",
    "light_sleep_min",
    "deep_sleep_min",
    "sleep_latency_min",
    "awake_min",
    "n_wakeups",
    "wakeup_latency_min",
    "bed_in_min",
    "bed_out_min",
    "steps",
)

MODALITIES = ("weight", "sleep", "steps")

MODALITY_COLUMNS = {
    "weight": (0,),
    "sleep": (1, 2, 3, 4, 5, 6, 7, 8),
    "steps": (9,),
}

MODALITY_DIMS = {m: len(c) for m, c in MODALITY_COLUMNS.items()}

STATIC_FEATURES = ("height_cm", "gender", "age_band", "objective_kg")

# z-scored statics; gender stays 0/1
NORMALIZED_STATICS = ("height_cm", "age_band", "objective_kg")


def modality_order(names):
    """Sort modality names canonically (weight, sleep, steps)."""
    return sorted(names, key=MODALITIES.index)
