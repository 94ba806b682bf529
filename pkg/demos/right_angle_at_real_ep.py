"""When the absorption is tuned so an EP sits exactly on the real axis, a
real sweep runs straight through it: both the energy and width differences
vanish together, and the two trajectories meet at a right angle.

    python3 demos/right_angle_at_real_ep.py
"""
import math

from epscope import (
    TwoLevelParams,
    classify_crossing,
    crossing_angle_at_ep,
    eigenvalues_general,
    sweep_real,
    two_level_family,
)

p = TwoLevelParams(mu=math.tan(0.4))  # defaults: eps = (1, 2), omega = (1, -1), phi1 = 0.2
f = two_level_family(p)
lam_c = 0.5 / math.cos(0.4)

c = classify_crossing(sweep_real(f, 0.0, 1.0, 200))
print(f"classification: {c.kind.value}")
print(f"passage at lambda = {c.crossing_lambda:.9f} (expected {lam_c:.9f})")
print(f"angle between incoming and outgoing trajectory: {crossing_angle_at_ep(f, lam_c):.3f} deg")

# the gap closes like sqrt(lambda - lambda_c)
for offset in (1e-2, 1e-3, 1e-4):
    ev = eigenvalues_general(f(lam_c + offset)).eigenvalues
    print(f"  lambda_c + {offset:g}: E = {ev[0]:.5f}, {ev[1]:.5f}")
