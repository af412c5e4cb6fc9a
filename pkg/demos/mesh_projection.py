"""
Threshold-triangle meshes and field projection
==============================================

Admissible threshold pairs ``s1 < s2`` fill a right triangle.  Each
refinement level splits every cell into four congruent copies, and a
field is stored as one value per cell (its mean).  Restriction to a
coarser level is again a block mean, so projections at different depths
nest exactly and the projection error of a smooth field halves per
level.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection

from hystrl import TriDomain, p_norm, project_analytic, prolong, refine, restrict
from hystrl.config import field_fn

HERE = Path(__file__).parent
DOMAIN = TriDomain(-1.0, 1.0)
SMOOTH = field_fn("smooth")

# fine reference and its restrictions
REF_LEVEL = 9
mu_ref = project_analytic(DOMAIN, SMOOTH, REF_LEVEL, oversample=3)

levels = range(1, 8)
errors = []
for j in levels:
    coarse = restrict(mu_ref, j)
    diff = mu_ref.with_flat(prolong(coarse, REF_LEVEL).flat() - mu_ref.flat())
    errors.append(p_norm(diff))
    # orthogonality: the projection error is Pythagorean
    gap = np.sqrt(p_norm(mu_ref) ** 2 - p_norm(coarse) ** 2)
    assert abs(gap - errors[-1]) < 1e-8 * max(errors[-1], 1e-30)

slope = np.polyfit(list(levels), np.log2(errors), 1)[0]
print("level   L2 error")
for j, e in zip(levels, errors):
    print(f"  {j}     {e:.3e}")
print(f"decay slope: {slope:.3f} per level (expect about -1)")


def cell_plot(ax, param, title):
    mesh = refine(param.domain, param.levels[0])
    pc = PolyCollection(mesh.vertices, array=param.channel_values[0], cmap="viridis")
    ax.add_collection(pc)
    ax.autoscale_view()
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("s1")
    ax.set_ylabel("s2")
    return pc


fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
cell_plot(axes[0], restrict(mu_ref, 2), "level 2 (16 cells)")
pc = cell_plot(axes[1], restrict(mu_ref, 4), "level 4 (256 cells)")
fig.colorbar(pc, ax=axes[:2], shrink=0.8)

axes[2].semilogy(list(levels), errors, "o-")
axes[2].set_xlabel("level j")
axes[2].set_ylabel("projection error")
axes[2].set_title(f"error halves per level (slope {slope:.2f})", fontsize=9)

fig.savefig(HERE / "mesh_projection.png", dpi=150, bbox_inches="tight")
print(f"wrote {HERE / 'mesh_projection.png'}")
