"""The bundled synthetic problems and their certified constants.

Each problem declares the constants its oracles promise to respect: a gap
bound delta, per-coordinate smoothness constants L_j (stored with the
sqrt(d) normalization |d_j f(x) - d_j f(y)| <= (L_j/sqrt(d)) ||x-y||_2),
and almost-sure noise bounds sigma_j.  The verifier stress-tests all three
contracts empirically and reports the worst observed ratio (anything above
1 is a violation).

Run:  python demos/02_problems_and_contracts.py
"""

import numpy as np

from signstorm import (
    bounded_nonconvex,
    make_rng,
    noisy_quadratic,
    synthetic_logistic,
    verify_assumptions,
)

d = 4
problems = [
    noisy_quadratic(d, np.array([1.0, 2.0, 3.0, 4.0]), 0.5 * np.ones(d), np.ones(d)),
    bounded_nonconvex(d, np.ones(d), 0.3 * np.ones(d), np.ones(d)),
    synthetic_logistic(d, 16, 1.0, np.zeros(d)),
]

for problem in problems:
    consts = problem.constants
    print(f"{problem.name}:")
    print(f"  delta upper bound   = {consts.delta_upper:.4f}")
    print(f"  L_vec               = {np.round(consts.L_vec, 3)}")
    print(f"  sigma_vec           = {np.round(consts.sigma_vec, 3)}")
    report = verify_assumptions(problem, n_probes=3000, rng=make_rng(7))
    for check in report.checks():
        status = "ok" if check.passed else "VIOLATED"
        print(f"  {check.name:14s} worst ratio {check.worst_ratio:8.4f}  {status}")
    print()

print("fault injection: halving the declared L_vec must be caught")
import dataclasses

broken = noisy_quadratic(d, np.ones(d), 0.5 * np.ones(d), np.ones(d))
broken.constants = dataclasses.replace(broken.constants,
                                       L_vec=0.5 * broken.constants.L_vec)
report = verify_assumptions(broken, n_probes=10_000, rng=make_rng(8))
print(f"  smoothness worst ratio {report.smoothness.worst_ratio:.3f} "
      f"(passed = {report.smoothness.passed})")
