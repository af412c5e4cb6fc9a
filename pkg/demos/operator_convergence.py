"""
Operator output error under mesh coarsening
===========================================

Distribute a smooth weight field over the threshold triangle, drive a
play bank on every cell with the same rough piecewise linear input, and
compare the scalar outputs of coarse banks against a fine reference.
For a Lipschitz ridge the consistency error contracts like ``4^{-j}``,
two binary orders per level.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hystrl import rate_experiment
from hystrl.config import build_domain, build_field_fn, build_gamma, build_pl_input, resolve_config

HERE = Path(__file__).parent

cfg = resolve_config("approx-error")
table = rate_experiment(
    build_domain(cfg["domain"]),
    build_gamma(cfg["gamma"]),
    build_pl_input(cfg["input"], np.random.default_rng(cfg["seed"])),
    build_field_fn(cfg["mu"]),
    cfg["fine_level"],
    cfg["levels"],
)

print("level  sup error   rescaled constant")
for j, e, c in zip(table.levels, table.errors, table.constants):
    print(f"  {j}    {e:.3e}   {c:.3f}")
print(f"slope: {table.slope:.3f} log2-per-level (expect about -2)")

fig, ax = plt.subplots(figsize=(5, 4))
ax.semilogy(table.levels, table.errors, "o-", base=2, label="measured")
anchor = table.errors[0] * 4.0 ** np.array(table.levels[0])
ax.semilogy(
    table.levels,
    anchor * 4.0 ** -np.array(table.levels),
    "k--",
    lw=0.8,
    base=2,
    label="slope -2 reference",
)
ax.set_xlabel("mesh level j")
ax.set_ylabel("sup output deviation")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "operator_convergence.png", dpi=150)
print(f"wrote {HERE / 'operator_convergence.png'}")
