"""
Predictor-corrector orders on a memory-laden benchmark
======================================================

The integrator marches right-hand sides that may read the whole committed
trajectory.  On an integro-differential problem with a known solution the
two-step scheme lands at second order and the four-step scheme at fourth,
visible as parallel lines on a log-log error plot.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hystrl import PCScheme
from hystrl.benchmarks import integro_problem, order_check

HERE = Path(__file__).parent

dts = [4e-3, 2e-3, 1e-3, 5e-4]
problem = integro_problem()

fig, ax = plt.subplots(figsize=(5, 4))
for order, marker in ((2, "o"), (4, "s")):
    chk = order_check(problem, PCScheme(order), dts)
    print(f"p={order}: slope {chk.slope:.3f}, errors {['%.2e' % e for e in chk.errors]}")
    ax.loglog(chk.dts, chk.errors, marker + "-", label=f"p={order} (slope {chk.slope:.2f})")

ax.set_xlabel("step size")
ax.set_ylabel("endpoint error")
ax.set_title("observed orders on the integro-differential benchmark", fontsize=9)
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "integrator_orders.png", dpi=150)
print(f"wrote {HERE / 'integrator_orders.png'}")
