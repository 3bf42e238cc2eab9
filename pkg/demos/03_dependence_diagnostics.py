#!/usr/bin/env python3
"""Inter-vector dependence structures and their tail diagnostics.

Two couplings between claim vectors are built in.  The FGM chain ties four
components of a vector pair through a bounded copula perturbation: its
scalarized exceedances stay regression dependent, the strong form of weak
dependence.  The cubic pair shares tail events across vectors strongly
enough to break regression dependence while staying quasi-asymptotically
independent: the joint-exceedance ratio vanishes, but the conditional one
tends to a positive limit (3/4 bound, actual limit 1).
"""

import numpy as np

from ruinflow import ClaimModel, MaxExceed, Pareto, fgm_joint_survival, qai_ratio, rd_violation_ratio

target = MaxExceed(b=(1.0, 1.0))

print("== FGM chain: coupling is invisible in any strict subset ==")
g = Pareto(2.0, 1.0)
x = float(g.quantile(0.5))
for theta in (0.0, 0.5, 1.0):
    full = float(fgm_joint_survival(theta, g, x, x, x, x))
    print(f"  theta={theta:4.1f}: joint survival of all four = {full:.6f} "
          f"(independent product = {0.5**4:.6f})")
print("  any three components:", float(fgm_joint_survival(1.0, g, x, x, x, 0.0)),
      "= product", 0.5**3)

print("\n== FGM chain sampling matches the analytic joint ==")
model = ClaimModel.fgm_chain(0.9, g)
rng = np.random.default_rng(1)
n_pairs = 200_000
seq = model.sample_sequence(2 * n_pairs, rng).reshape(n_pairs, 4)
p_hat = np.all(seq > x, axis=1).mean()
p = float(fgm_joint_survival(0.9, g, x, x, x, x))
print(f"  empirical {p_hat:.6f} vs analytic {p:.6f} over {n_pairs} pairs")

print("\n== cubic pair: quasi-asymptotic independence without regression dependence ==")
pair = ClaimModel.cubic_pair()
print(f"  {'x':>8s} {'joint/(sum of marginals)':>26s} {'joint/first marginal':>22s}")
for x in (10.0, 100.0, 1000.0, 10000.0):
    q = qai_ratio(pair, target, x)
    r = rd_violation_ratio(pair, target, x)
    print(f"  {x:8.0f} {q:26.3e} {r:22.4f}")
print("  the left column vanishes (quasi-asymptotic independence); the right")
print("  column stays above 3/4, which no regression-dependence bound allows")

print("\n== empirical route with Wilson intervals ==")
fgm = ClaimModel.fgm_chain(0.8, g)
out = qai_ratio(fgm, target, 3.0, n=200_000, rng=np.random.default_rng(2))
print(f"  FGM pair at x=3: ratio {out.value:.4f} "
      f"[{out.ci_lo:.4f}, {out.ci_hi:.4f}], joint count {out.joint_count}, "
      f"reliable: {out.reliable}")
