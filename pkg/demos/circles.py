"""Concentric circles: on-shell functions that are also rotation invariant.

The action z * prod_k (x^2 + y^2 - k^2) forces the point (x, y) onto one of
N circles; rotations act on each.  Invariant on-shell functions are the
locally constant ones, one per circle, so the gh-0 BV cohomology has
dimension N once the degree window is large enough.
"""

from bvw import check_cme, build_extended_action, cohomology_dim, toy_circles

for N in (1, 2, 3):
    m = toy_circles(N)
    print("N = %d" % N)
    print("  S     =", m.action)
    print("  S_ext =", build_extended_action(m))
    print("  CME holds:", check_cme(m)["holds"])
    for D in range(0, 2 * N + 1, 2):
        r = cohomology_dim(m, "s", 0, D)
        print("  max degree %d: dim H^0(s) = %d" % (D, r.dim_cohomology))
    print("  representatives:", ", ".join(str(p) for p in r.representative_cocycles))
