"""Two sweeps of one two-level family, with absorption just below and just
above the value at which an exceptional point crosses the real axis.

Below it the widths cross while the energies repel; above it the roles
swap. The classifier shows which one happened and how far the sweep passed
from the nearest EP.

    python3 demos/level_repulsion_vs_crossing.py
"""
import math

from epscope import TwoLevelParams, classify_crossing, ep_closed_form, sweep_real, two_level_family

base = TwoLevelParams(eps1=1, eps2=2, omega1=1, omega2=-1, phi1=0.2,
                      sigma1=1, sigma2=0, phi2=0)

print("EPs cross the real axis at mu = tan(0.4) =", round(math.tan(0.4), 5))
for mu in (0.35, 0.5):
    p = base.replace(mu=mu)
    t = sweep_real(two_level_family(p), 0.0, 1.0, 200)
    c = classify_crossing(t)
    eps = ", ".join(f"{e.lambda_c:.5f}" for e in ep_closed_form(p))
    print(f"\nmu = {mu}")
    print(f"  closed-form EPs: {eps}")
    print(f"  passage: {c.kind.value} at lambda = {c.crossing_lambda:.6f}")
    print(f"  nearest EP {c.nearest_ep.lambda_c:.6f}, |Im| = {c.ep_distance:.4f}")
    print(f"  smallest gap along the sweep: {c.min_gap:.4f}")
