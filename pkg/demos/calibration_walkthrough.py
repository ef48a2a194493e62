"""
Recovering slate-independent scores from biased slates
======================================================

Each scoring call sees only a handful of candidates, and the scores it
returns drift with the company a candidate keeps. Here we plant true scores,
show them through noisy, per-slate shifted views, and fit them back.
"""

import numpy as np
from scipy.stats import kendalltau

from semtree.calibration import ScoreHistory, SlateRecord, SolverConfig, record_slate, solve_mle

rng = np.random.default_rng(0)
truth = rng.uniform(0.1, 0.9, 50)

# every slate shares one random offset and adds small per-item noise
history = ScoreHistory()
for slate in range(30):
    members = rng.choice(50, 10, replace=False)
    shift = rng.uniform(-0.1, 0.1)
    seen = np.clip(0.8 * truth[members] + shift + rng.normal(0, 0.02, 10), 0, 1)
    record_slate(history, SlateRecord(slate, tuple((f"v{m}", float(s)) for m, s in zip(members, seen))))

# plain averaging of what each node was shown with
plain = solve_mle(history, SolverConfig.mean_only())
# the affine fit, which also estimates each slate's offset
# (scale is only fixed up to a gauge, so ``a`` stays near 1 and the latent scores absorb it)
fitted = solve_mle(history)

nodes = sorted(fitted.latent)
ref = [truth[int(v[1:])] for v in nodes]
for name, model in [("averaged", plain), ("fitted", fitted)]:
    est = [model.latent[v] for v in nodes]
    print(f"{name:9s} tau={kendalltau(est, ref).statistic:.3f}  r={np.corrcoef(est, ref)[0, 1]:.4f}")

print(f"scale a={fitted.a:.3f}; first slate offsets:", {k: round(b, 3) for k, b in list(fitted.biases.items())[:4]})
