"""The snowflake-to-rug identity distorts crossing moduli in one direction only.

Horizontal crossings cost the same on both sides up to a factor that
shrinks with resolution, but the vertical rug edges are much longer than
the snowflaked ones, so the inverse ratio grows linearly in n.
"""

from qcmod.qc import product_4regular_study, snowflake_rug_study

study = snowflake_rug_study((8, 16, 32), Q=3.0)
print(f"{'n':>4} {'Mod_X':>12} {'Mod_Y':>12} {'fwd ratio':>10} {'inv ratio':>10} "
      f"{'K':>8} {'K inv':>8}")
for r in study["rows"]:
    print(f"{r['n']:>4} {r['mod_X']:12.6g} {r['mod_Y']:12.6g} {r['forward_ratio']:10.4g} "
          f"{r['inverse_ratio']:10.4g} {r['analytic_K']:8.4g} {r['analytic_K_inverse']:8.4g}")
print("verdict:", study["verdict"])

prod = product_4regular_study((4, 8), Q=4.0)
print("\nproducts with an interval, lines along the rectifiable axis")
for r in prod["rows"]:
    print(f"  n={r['n']}: Mod_X={r['mod_X']:.6g} (Fubini {r['fubini_X']:.6g}), "
          f"Mod_Y={r['mod_Y']:.6g} (Fubini {r['fubini_Y']:.6g})")
