"""Spatial refinement study with dt = h^2, reproducing the convergence-table
workflow: halve h, march to t=1, tabulate terminal errors and observed rates.

With the default levels this takes under a minute; append 32 to LEVELS to
reproduce the full four-level table (several minutes, ~1000 steps at n=32).

Expected rates: ~3 for u in L2 (the L2 displacement estimate), ~2 for u in
H1, ~2 for p in L2, ~1 for p in H1. The quadratic-displacement case shows
the locking-free behavior with its u columns at solver precision because the
exact displacement lies in the P2 space.

Run:  python demos/02_spatial_convergence.py
"""

import pathlib

from porofem import convergence_study

out = pathlib.Path("demo_output")
out.mkdir(exist_ok=True)

LEVELS = [4, 8, 16]

for name in ("test1", "test2"):
    report = convergence_study(name, LEVELS, theta=1, dt_rule="h2")
    print(f"\n=== case {name}, theta=1, dt=h^2, T=1 ===")
    print(report.to_markdown())
    (out / f"spatial_{name}.csv").write_text(report.to_csv())
    (out / f"spatial_{name}.md").write_text(report.to_markdown())
print(f"tables written to {out}/")

# the same study through the command line:
#   porofem convergence --case test1 --levels 4,8,16,32 --dt h2 --out demo_output
