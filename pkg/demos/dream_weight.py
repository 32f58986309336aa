"""Dreaming: which input sequence does a trained model find most convincing?

A small LSTM is trained on planted data where a falling weight curve makes
success likely. Gradient ascent on the input (with an L2 penalty keeping it
near the average user) then produces one sequence the model scores as
success and one it scores as failure. The weight channel of the success
dream should slope downwards. The curves are written to dream_weight.svg.

    python demos/dream_weight.py [output.svg]
"""

import sys

import numpy as np

from xmodal import DreamConfig, Rng, TrainConfig, build_model, dream, lstm_spec, train
from xmodal.data import SyntheticConfig, generate_synthetic, normalize
from xmodal.dream import denormalize
from xmodal.features import SEQ_FEATURES
from xmodal.svg import line_chart

T = 14
data = generate_synthetic(SyntheticConfig(
    n_users=1000, T_range=(T, T), seed=7, coefs={"weight_trend": 2.5, "objective": 1.0},
))
norm, stats = normalize(data, np.arange(len(data)))
model = build_model(lstm_spec((8, 16, 32), head=(16, 1)), Rng(7).child("init"))
model, history = train(model, norm, TrainConfig(epochs=40, batch_size=64, seed=7))
model.stats = stats.to_dict()
print(f"training loss {history[0]:.3f} -> {history[-1]:.3f}")

wi = SEQ_FEATURES.index("weight_kg")
curves = []
for target in ("success", "failure"):
    res = dream(model, DreamConfig(target=target, T=T))
    w = denormalize(res, model.stats)[:, wi]
    print(f"{target:>8}: P(success) {res.final_confidence:.2f} after {res.iterations} steps ({res.status}); "
          f"weight {w[0]:.2f} -> {w[-1]:.2f} kg")
    curves.append((target, list(range(T)), w.tolist()))

out = sys.argv[1] if len(sys.argv) > 1 else "dream_weight.svg"
with open(out, "w") as fh:
    fh.write(line_chart(curves, "Dreamed weight, objective -4 kg", "day", "kg"))
print("wrote", out)
