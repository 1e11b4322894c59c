"""The constrained variant and its three fates.

Here each step minimizes a quadratic smoothness functional subject to a
budget eps on the weighted misfit against the targets and the previous
step.  The per-step penalty is whatever KKT multiplier makes the budget
tight; the zero function wins outright the moment it fits the budget.

Where ||y||^2 / N falls against eps and eps/alpha decides everything in
advance: at or below eps the chain is zero from step one; between eps
and eps/alpha it limps for finitely many steps and then collapses; above
eps/alpha it never dies.  This script runs one chain per regime on the
same data and plots the norm trajectories and per-step penalties.
"""

import math
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import selfdistill as sd

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(12)
n = 8
X = rng.uniform(-1, 1, size=(n, 2))
y = rng.normal(size=n)
G = sd.gram_matrix(sd.KernelSpec.rbf(0.7), X) / n
alpha = 0.5
t = float(y @ y) / n
print(f"||y||^2 / N = {t:.4f}")

fig, (ax_norm, ax_lam) = plt.subplots(1, 2, figsize=(11, 4))
for eps in (1.3 * t, 0.7 * t, 0.3 * alpha * t):
    config = sd.ConstrainedConfig(eps=eps, alpha=alpha, G=G, y=y)
    chain = sd.run_constrained_chain(config, steps=15)
    regime = chain.classification.regime.value
    norms = [np.linalg.norm(p) for p in chain.predictions]
    label = f"{regime} (eps={eps:.3f})"
    ax_norm.plot(norms, "o-", ms=4, label=label)
    finite = [(tau, lam) for tau, lam in enumerate(chain.multipliers, start=1)
              if not math.isinf(lam)]
    if finite:
        ax_lam.plot(*zip(*finite), "o-", ms=4, label=label)
    collapse = chain.collapsed_at if chain.collapsed_at is not None else "never"
    print(f"eps={eps:.4f}: regime {regime}, collapsed at step {collapse}, "
          f"first multipliers {[f'{m:.3g}' for m in chain.multipliers[:3]]}")
ax_norm.set_xlabel("step")
ax_norm.set_ylabel("||y^(tau)||")
ax_norm.legend(fontsize="small")
ax_norm.grid(alpha=0.3)
ax_lam.set_xlabel("step")
ax_lam.set_ylabel("per-step penalty")
ax_lam.set_yscale("log")
ax_lam.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "collapse_regimes.png", dpi=130)
print(f"wrote {OUT / 'collapse_regimes.png'}")
