"""Geometric errors of the triangulation and the locality of the L2 projection.

First the distance from the flat mesh to the exact surface and the measure
ratio delta_h are tracked over refinement; both decay like h^2. Then the L2
projection of a single-element indicator shows its exponential tail.
"""
# %%
from esfem.experiments import run_geometry_checks, run_l2_decay

geo = run_geometry_checks([1, 2, 3, 4], times=(0.25,), forms=False)
for r in geo.rows:
    print(f"level {r['level']}: h={r['h']:.4f}  max|d|={r['d_max']:.3e}  max|1-delta_h|={r['delta_dev']:.3e}")
print(geo.summary())

# %% Norm of P_h(indicator) in bands of width h around the source element
decay = run_l2_decay(level=4)
for r in decay.rows[:12]:
    print(f"band {r['band']:>2}: {r['norm']:.3e}  ({r['elements']} elements)")
print(decay.summary())
