"""Carry both eigenvectors around an exceptional point.

One loop swaps the levels, and exactly one of the two vectors comes back
with a minus sign. Two loops restore the labels with both vectors negated,
and only four loops return the system to its starting state. For contrast,
the same loops in the Hermitian-overlap gauge give phases that are not
quantised at all.

    python3 demos/encircling_an_ep.py
"""
import cmath
import math

from epscope import LoopSpec, TwoLevelParams, encircle, two_level_family

f = two_level_family(TwoLevelParams())  # mu = 0: EPs at 0.5*exp(+-0.4i)
ep = 0.5 * cmath.exp(0.4j)


def show(label, res):
    phases = ", ".join(f"{z.real:+.6f}{z.imag:+.6f}i" for z in res.phases)
    print(f"{label:28s} permutation {list(res.permutation)}  phases [{phases}]")


for loops in (1, 2, 3, 4):
    show(f"{loops} loop(s) around the EP", encircle(f, LoopSpec(ep, 0.1, steps=4096, loops=loops)))
show("1 loop around lambda = 0", encircle(f, LoopSpec(0.0, 0.1, steps=1024)))
show("1 loop, clockwise", encircle(f, LoopSpec(ep, 0.1, steps=4096, orientation=-1)))

print("\nHermitian-overlap gauge:")
for loops in (2, 4):
    res = encircle(f, LoopSpec(ep, 0.1, steps=4096, loops=loops), gauge="hermitian")
    show(f"{loops} loops", res)
    print(f"{'':28s} phase angles {[round(math.degrees(cmath.phase(z)), 2) for z in res.phases]}")
