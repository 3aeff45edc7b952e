"""Full report for a random remetrization of a small grid.

The battery ratios give a lower bound for K_O, which can never exceed
the analytic dilatation computed from gradients and Jacobians.
"""

import json

from qcmod import build_grid, qc_report, random_remetrization

f = random_remetrization(build_grid(5, 1, 1), seed=7, spread=2.0)
rep = qc_report(f, 2.0)
print(f"analytic K        {rep.analytic_K:.6f}")
print(f"analytic K (inv)  {rep.analytic_K_inverse:.6f}")
print(f"ess sup H_O       {rep.esssup_HO:.6f}")
print(f"K_O lower bound   {rep.K_O_lower:.6f}")
print("worst families:")
rows = sorted((r for r in rep.ko.rows if r.ratio is not None), key=lambda r: -r.ratio)
for r in rows[:5]:
    print(f"  {r.label:<28} ratio {r.ratio:.6f}")
print(json.dumps(rep.verdicts, indent=2))
