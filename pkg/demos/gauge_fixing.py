"""Gauge fixing an su(2) adjoint scalar and reading off the BRST table."""

from bvw import build_extended_action, check_cme, expand_by_ta, gauge_fix, lie_gauge

m = lie_gauge("su2", "adjoint", gauge_fix=True)
ext = build_extended_action(m)
print("extended action:", ext)
print("CME holds:", check_cme(m)["holds"])
print("gauge fermion:", m.gauge_fermion)

fixed = gauge_fix(m, ext)
ex = expand_by_ta(m, fixed)
print("gauge-fixed action:", ex["gauge_fixed_action"])
print("BRST transformations:")
for gen, image in ex["brst_table"].items():
    print("  s %-4s = %s" % (gen, image))
