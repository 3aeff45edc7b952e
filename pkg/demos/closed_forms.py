"""Moduli that can be checked by hand.

A path of L unit edges has Mod_p = L^(1-p); at p = 2 modulus equals
effective conductance; the left-right crossing modulus of the unit square
grid approaches the continuum value 1 like 1 + 1/n.
"""

from qcmod import (
    build_grid,
    build_path,
    compute_modulus,
    conductance_oracle,
    connect_family,
    random_space,
)
from qcmod.qc import crossing_family

print("path graphs")
for L in (2, 4, 8):
    for p in (1.5, 2.0, 3.0):
        res = compute_modulus(build_path(L), connect_family([0], [L]), p)
        print(f"  L={L} p={p}: {res.value:.10f}  closed form {L ** (1 - p):.10f}")

print("p=2 against effective conductance")
for seed in range(3):
    X = random_space(12, extra_edges=10, seed=seed)
    val = compute_modulus(X, connect_family([0], [11]), 2).value
    print(f"  seed {seed}: modulus {val:.10f}  conductance {conductance_oracle(X, [0], [11]):.10f}")

print("crossing the unit square")
for n in (8, 16, 32, 64):
    X = build_grid(n, 1, 1)
    res = compute_modulus(X, crossing_family(X, 0), 2)
    print(f"  n={n}: [{res.lower:.8f}, {res.upper:.8f}]  1 + 1/n = {1 + 1 / n:.8f}")
