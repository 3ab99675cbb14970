"""Discrete SDF validity, step by step.

Every sample (point, signed value) pins a sphere: the surface must touch it
and may not pass through it.  A finite sample set is realizable by some
surface exactly when no differently signed spheres overlap and every sphere
keeps at least one point not buried inside another sample's ball.  This
script walks through small configurations and shows how each rule fails.
"""

import numpy as np

from sdfgrow import SampleSet, check_validity, check_validity_oracle, \
    pairwise_lipschitz

scenes = {
    "single sphere": SampleSet([[0.0, 0.0]], [1.0]),
    "touching opposite signs": SampleSet([[0.0, 0.0], [1.5, 0.0]],
                                         [1.0, -0.5]),
    "overlapping opposite signs": SampleSet([[0.0, 0.0], [1.0, 0.0]],
                                            [1.0, -0.5]),
    "buried sphere": SampleSet([[0.0, 0.0], [0.1, 0.0]], [1.0, 0.5]),
    "contradictory duplicate": SampleSet([[0.0, 0.0], [0.0, 0.0]],
                                         [0.5, 0.8]),
}

for name, s in scenes.items():
    report = check_validity(s)
    print(f"--- {name}")
    print(f"    exact check : {report}")
    print(f"    brute force : "
          f"{'valid' if check_validity_oracle(s, 4096) else 'invalid'}")
    print(f"    1-Lipschitz : {pairwise_lipschitz(s)}")

print()
print("The 1-Lipschitz pair test is necessary but not sufficient:")
s = SampleSet([[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]], [0.9, 0.9, -0.1])
print(f"  three spheres, lipschitz={pairwise_lipschitz(s)}, "
      f"verdict={check_validity(s)!s}")

print()
print("Validity survives deleting samples (coverage only shrinks):")
rng = np.random.default_rng(5)
s = SampleSet(rng.uniform(-0.7, 0.7, (6, 2)), rng.uniform(0.05, 0.2, 6))
sub, _ = s.subset([0, 2, 4])
print(f"  full set valid={check_validity(s).valid}, "
      f"subset valid={check_validity(sub).valid}")
