"""Repairing a pseudo-SDF from a CSG min-union.

Taking the pointwise minimum of two SDFs yields the union's zero level set,
but the interior values underestimate true distance wherever both shapes
are closer than their common boundary.  Those samples are exactly the fully
covered spheres.  Repair strips them all at once and reassigns each its
minimum valid radius against the frozen remainder -- an embarrassingly
parallel map whose result is provably a valid discrete SDF and independent
of the worker count.
"""

import os

import numpy as np

from sdfgrow import check_validity
from sdfgrow.fields import two_circle_union_grid
from sdfgrow.gridio import write_grid
from sdfgrow.repair import find_fully_covered, repair_pseudo_sdf

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

grid = two_circle_union_grid(resolution=45)
print("min-union of unit circles at (+-0.6, 0), sampled 45x45 on [-1,1]^2")

covered = find_fully_covered(grid.to_sample_set())
pts = grid.to_sample_set().points[covered]
print(f"{len(covered)} underestimated samples, all in the lens "
      f"(|x| <= {np.abs(pts[:, 0]).max():.3f})")

result = repair_pseudo_sdf(grid, workers=1)
print(f"repaired {result.stats['changed']} samples "
      f"in {result.stats['wall_time']:.2f}s")

flat = grid.flat_index((22, 22))
print(f"origin sample: pseudo {grid.values[flat]:+.4f} -> "
      f"repaired {result.repaired.values[flat]:+.4f} "
      f"(true distance to the union boundary is 0.8, via the lens corners)")

deltas = [abs(new) - abs(old) for _, old, new in result.changed]
print(f"magnitude growth: min {min(deltas):.4f}, max {max(deltas):.4f} "
      f"(never negative: pseudo-SDFs are conservative)")

print(f"repaired grid: {check_validity(result.repaired.to_sample_set())!s}")

again = repair_pseudo_sdf(result.repaired)
print(f"repairing the output changes {again.stats['changed']} samples "
      f"(idempotent)")

write_grid(result.repaired, os.path.join(OUT, "union_repaired.sdfgrid"))
print(f"wrote {OUT}/union_repaired.sdfgrid")
