"""Watching the chain shrink, one eigendirection at a time.

In the eigenbasis of the Gram matrix a distillation step multiplies each
target coordinate by a scalar, so the entire chain state is a diagonal
of shrinkage factors B that starts at 1 and decays.  Small eigenvalues
shrink fastest: the fit progressively drops its least-supported basis
directions, and the consecutive ratios B[k+1]/B[k] measure how lopsided
that pruning is.

With alpha = 0 the ratios grow strictly with every step (provably).
With ground truth blended back in the diagonal stalls at a positive
limit d/(d + lam/alpha) instead of dying, and a one-step-ahead
predictor tells the sign of each ratio's next move from the current
state alone.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import selfdistill as sd

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

data = sd.generate_sine(n_points=11, noise_sigma=0.5, seed=7)
kernel = sd.KernelSpec.rbf(gamma=1 / 80)
K = sd.gram_matrix(kernel, data.X)
dec = sd.eig_sym(K)
lam, steps = 0.2, 6

fig, axes = plt.subplots(2, 2, figsize=(11, 7))
for col, alpha in enumerate((0.0, 0.35)):
    state = sd.SpectralState.create(dec, alpha, lam)
    state.advance(steps)
    for tau in range(1, steps + 1):
        axes[0, col].plot(state.b_history[tau], "o-", ms=3, label=f"step {tau}")
        b = state.b_history[tau]
        keep = b > 0
        axes[1, col].plot(np.arange(1, len(b))[keep[1:] & keep[:-1]],
                          sd.rk_ratios(b)[keep[1:] & keep[:-1]], "o-", ms=3)
    axes[0, col].set_title(f"shrinkage diagonal, alpha = {alpha:g}")
    axes[0, col].set_xlabel("eigenvalue index (ascending)")
    axes[1, col].set_title(f"consecutive ratios, alpha = {alpha:g}")
    axes[1, col].set_xlabel("k")
    axes[1, col].set_yscale("log")
    for ax in (axes[0, col], axes[1, col]):
        ax.grid(alpha=0.3)
axes[0, 0].legend(fontsize="x-small")
fig.tight_layout()
fig.savefig(OUT / "shrinkage_diagnostics.png", dpi=130)
print(f"wrote {OUT / 'shrinkage_diagnostics.png'}")

# the sign predictor in action on the two largest eigendirections
alpha = 0.35
state = sd.SpectralState.create(dec, alpha, lam)
state.advance(1)
a_k, a_j = state.a[-1], state.a[-2]
for tau in range(1, 7):
    b = state.b
    predicted = sd.ratio_sign_predictor(b[-1], b[-2], a_k, a_j, alpha)
    state.advance(1)
    actual = np.sign(state.b[-1] / state.b[-2] - b[-1] / b[-2])
    print(f"step {tau} -> {tau + 1}: predicted ratio move {predicted:+d}, actual {actual:+.0f}")
