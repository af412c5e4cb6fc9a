"""
Wing section: robotic form, linearizing torque, energy audit
============================================================

Pitch-plunge wing dynamics come in robotic form ``M(q) qdd + C qd +
grad V(q) = tau + hysteretic moment``.  A computed-torque law turns the
closed loop into companion-form first-order dynamics, so the very same
motion can be produced two ways: integrate the robotic equations under
the torque, or integrate the transformed linear core.  The two records
agree to integrator accuracy, and with the torque removed the full
nonlinear model conserves its mechanical energy.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hystrl import (
    FirstOrderPlant,
    PCScheme,
    RoboticPlant,
    integrate,
    regulator_transform,
)
from hystrl.adaptive import multisine
from hystrl.config import build_aero, build_gains, build_wing, resolve_config

HERE = Path(__file__).parent
cfg = resolve_config("simulate-plant", {"mode": "full"})

# --- same motion along two routes -----------------------------------
form = build_wing(cfg, build_aero(cfg["aero"]))
lin = regulator_transform(form, *build_gains(cfg["gains"]))
u = multisine(cfg["input"]["channels"])
X0 = np.asarray(cfg["X0"], dtype=float)
dt, n = 1e-3, 5000

first = integrate(FirstOrderPlant(lin.core, form, u), X0, dt, n, PCScheme(4))
robotic = integrate(
    RoboticPlant(form, lambda t, q, qd: lin.tau(t, q, qd, u(t))), X0, dt, n, PCScheme(4)
)
gap = np.max(np.abs(first.states - robotic.states))
print(f"transform gap sup|X_first - X_robotic| = {gap:.2e}")

# --- energy audit of the free full model ----------------------------
# dampers off: whatever drift remains is the integrator's
undamped = resolve_config(
    "simulate-plant", {"mode": "full", "wing": {"c_h": 0.0, "c_theta": 0.0}}
)
free_form = build_wing(undamped)
free = integrate(
    RoboticPlant(free_form, lambda t, q, qd: np.zeros(2)),
    np.array([0.3, 0.2, 0.0, 0.0]),
    1e-3, 8000, PCScheme(4),
)
E = np.array([free_form.energy(s[:2], s[2:]) for s in free.states])
print(f"undamped-motion energy drift: {np.max(np.abs(E - E[0])) / E[0]:.2e} relative")

fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
axes[0].plot(first.times, first.states[:, 0], lw=0.9, label="first-order route")
axes[0].plot(robotic.times, robotic.states[:, 0], "--", lw=0.9, label="robotic route")
axes[0].set_xlabel("t")
axes[0].set_ylabel("plunge")
axes[0].set_title("one motion, two integrations", fontsize=9)
axes[0].legend(fontsize=8)

axes[1].semilogy(first.times, np.maximum(np.max(np.abs(first.states - robotic.states), axis=1), 1e-18))
axes[1].set_xlabel("t")
axes[1].set_title("route disagreement stays at solver accuracy", fontsize=9)

axes[2].plot(free.times, (E - E[0]) / E[0], lw=0.8)
axes[2].set_xlabel("t")
axes[2].set_title("relative energy drift, undamped full model", fontsize=9)

fig.tight_layout()
fig.savefig(HERE / "wing_transforms.png", dpi=150)
print(f"wrote {HERE / 'wing_transforms.png'}")
