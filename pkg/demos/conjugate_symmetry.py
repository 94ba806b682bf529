"""Real symmetric families put their EPs in complex-conjugate pairs.
Adding absorption with unequal rates removes that symmetry.

    python3 demos/conjugate_symmetry.py [seed]
"""
import sys

import numpy as np

from epscope import MatrixFamily, SearchRegion, conjugate_pairing_check, locate

rng = np.random.default_rng(int(sys.argv[1]) if len(sys.argv) > 1 else 1)


def symmetric(n):
    m = rng.standard_normal((n, n))
    return (m + m.T) / 2


h0, h1 = symmetric(4), symmetric(4)
region = SearchRegion(-6, 6, -6, 6)

for label, f in (("no absorption", MatrixFamily(h0, h1)),
                 ("absorption", MatrixFamily(h0, h1, np.diag(rng.uniform(0, 1, 4)), mu=0.5))):
    eps = locate(f, region)
    report = conjugate_pairing_check(eps)
    print(f"\n{label}: {len(eps)} EPs, {len(report.pairs)} conjugate pairs, "
          f"{len(report.singletons)} unpaired")
    for e in sorted(eps, key=lambda e: (round(e.lambda_c.real, 6), e.lambda_c.imag)):
        print(f"  lambda_c = {e.lambda_c.real:+.6f} {e.lambda_c.imag:+.6f}i  levels {e.pair}")
