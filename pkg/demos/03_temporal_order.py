"""Temporal refinement study at a fixed mesh: halve dt, watch the error
differences.

The indicator order_T = |R(dt) - R(dt/2)| / |R(dt/2) - R(dt/4)| approaches 2
when the error behaves like (spatial part) + C*dt, i.e. first order in time.

Two practical points this demo illustrates:

* The three-field split damps the backward-Euler error heavily at these
  parameters (the kappa_2 weight on eta is ~6e-9), so the dt-signal is tiny
  (down at 1e-11 of the error) and the inner iteration must be polished well
  below it for clean order_T values; with the default 1e-9 tolerance the
  termination wobble would swamp the finest differences.
* For the quadratic case every field is linear in time, backward Euler is
  then exact, and the displacement columns show no dt-dependence at all:
  their order_T is meaningless roundoff. The pressure columns still carry a
  measurable signal through the spatial-error trajectory.

Run:  python demos/03_temporal_order.py
"""

import pathlib

from porofem import temporal_study

out = pathlib.Path("demo_output")
out.mkdir(exist_ok=True)

STUDIES = {
    "test1": [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160],
    "test2": [1 / 40, 1 / 80, 1 / 160, 1 / 320, 1 / 640],
}

for name, dts in STUDIES.items():
    report = temporal_study(name, 4, dts, theta=1, picard_tol=1e-13,
                            solver_opts={"picard_max": 200})
    print(f"\n=== case {name}, h=1/4, theta=1 ===")
    print(report.to_markdown())
    (out / f"temporal_{name}.csv").write_text(report.to_csv())
print(f"tables written to {out}/")
