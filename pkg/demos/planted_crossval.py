"""Cross-validated comparison of a plain LSTM and a budget-matched X-LSTM.

The planted data set has a steps modality that carries no label
information, while weight and sleep carry complementary signal. The X-LSTM
is allocated from unimodal hold-out AUCs, so it spends little on steps.
This is a scaled-down run (300 users, 5 folds, 15 epochs) that finishes in
about 15 seconds; the acceptance suite runs the full-size version.

    python demos/planted_crossval.py
"""

import time

from xmodal import ModalityScores, TrainConfig, allocate, compare, count_params, crossvalidate, lstm_spec, unimodal_scores
from xmodal.data import SyntheticConfig, generate_synthetic

t0 = time.time()
data = generate_synthetic(SyntheticConfig(n_users=300, T_range=(14, 14), seed=11, steps_noise_only=True))
print(f"{len(data)} users, {data.labels.mean():.0%} successful")

cfg = TrainConfig(epochs=15, batch_size=64, seed=11)
widths = (8, 16, 32)
scores = unimodal_scores(data, widths, cfg, k=5)
print("unimodal hold-out AUC:", {m: round(v, 3) for m, v in scores.items()})

base = lstm_spec(widths)
x = allocate(base, ModalityScores(scores, 30), "B")
print(f"X-LSTM(B) widths {x.spec.stream_widths}: {x.achieved_params} vs budget {count_params(base)}")

lstm_cv = crossvalidate(base, data, 5, cfg, name="lstm")
x_cv = crossvalidate(x.spec, data, 5, cfg, name="xlstm_b")
for r in (lstm_cv, x_cv):
    agg = r.aggregate
    print(f"{r.name:>8}: mean AUC {agg['auc']:.3f}  pooled F1 {agg['pooled']['f1']:.3f}  MCC {agg['pooled']['mcc']:.3f}")
t = compare(x_cv, lstm_cv)
print(f"paired t-test over folds: t = {t['t']:.2f}, p = {t['p']:.3f}")
print(f"done in {time.time() - t0:.0f}s")
