"""Verify the hand-derived gradients against finite differences.

The contrastive loss gradients are derived analytically (softmax algebra at
the embedding level, then chained through normalization, pooling, and the
linear projections). This script checks both levels against central
differences and prints the worst relative errors.
"""

import time

import numpy as np

from trialign.gradcheck import (check_info_nce_gradients,
                                check_train_step_gradients, run_gradcheck)
from trialign.loss import info_nce, info_nce_grad, similarity_logits

# A single instance, spelled out: loss value and one perturbed coordinate.
rng = np.random.default_rng(7)
a = rng.standard_normal((4, 8))
a /= np.linalg.norm(a, axis=1, keepdims=True)
b = rng.standard_normal((4, 8))
b /= np.linalg.norm(b, axis=1, keepdims=True)
tau = 0.1

pair = info_nce_grad(a, b, tau)
print(f"loss value on a 4x8 batch at tau={tau}: {pair.value:.6f}")

h = 1e-5
a_plus = a.copy()
a_plus[2, 5] += h
a_minus = a.copy()
a_minus[2, 5] -= h
numeric = (info_nce(similarity_logits(a_plus, b, tau))
           - info_nce(similarity_logits(a_minus, b, tau))) / (2 * h)
print(f"d(loss)/d(a[2,5]): analytic {pair.grad_a[2, 5]:+.10f}, "
      f"central difference {numeric:+.10f}")

# The full sweeps: 100 random instances each.
start = time.time()
loss_err = check_info_nce_gradients(trials=100, seed=0)
chain_err = check_train_step_gradients(trials=100, seed=1)
print(f"\n100-instance sweeps ({time.time() - start:.1f}s):")
print(f"  embedding-level max relative error: {loss_err:.3e}")
print(f"  end-to-end (loss -> weights) max relative error: {chain_err:.3e}")

report = run_gradcheck(trials=100, seed=0)
print(f"  tolerance {report.tolerance:.0e}: "
      f"{'PASS' if report.passed else 'FAIL'}")
