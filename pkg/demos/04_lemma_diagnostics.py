"""Running the lemma-level checkers against live trajectories.

The deterministic checkers must pass on every run: the movement bound
||x_{t+1}-x_t||_2 <= eta sqrt(d/(1-beta2)), the geometric-sum
representation of the estimator error eps_t = m_t - grad F(x_t), the
estimator split, and the ratio cap |m|/sqrt(v) <= 1/sqrt(1-beta2).  The
probability-bearing statements (the eps_t envelope, the sign dichotomy,
and the martingale partial-sum envelope) are measured as violation
frequencies over seeds.

Run:  python demos/04_lemma_diagnostics.py
"""

import numpy as np

from signstorm import (
    HyperParams,
    MdsKind,
    decomposition_check,
    epsilon_bound_frequency,
    estimator_ratio_check,
    lemma1_montecarlo,
    movement_bound_check,
    noisy_quadratic,
    representation_check,
    run_with_diagnostics,
    sign_dichotomy_frequency,
)

d = 8
problem = noisy_quadratic(d, np.ones(d), 0.4 * np.ones(d), np.linspace(0.6, 1.4, d))
hp = HyperParams(eta=0.01, beta1=0.95, beta2=0.5)

print("deterministic checks on a single run (T=2000):")
run = run_with_diagnostics(problem, hp, 2000, seed=42)
for result in (movement_bound_check(run.step_l2, hp, d),
               representation_check(run.trace, hp.beta1),
               decomposition_check(run),
               estimator_ratio_check(run)):
    print(f"  {result.name:22s} worst ratio {result.worst_ratio:10.3e}  "
          f"passed={result.passed}")

print("\nfrequency checks over 50 seeds (delta = 0.05):")
runs = [run_with_diagnostics(problem, hp, 300, seed=s) for s in range(50)]
consts = problem.constants
eps_rep = epsilon_bound_frequency([r.trace for r in runs], hp,
                                  consts.L_vec, consts.sigma_vec, 0.05)
dich_rep = sign_dichotomy_frequency(runs, consts.L_vec, consts.sigma_vec, 0.05)
for rep in (eps_rep, dich_rep):
    print(f"  {rep.name:22s} violations {rep.n_violations}/{rep.n_total} "
          f"(allowed fraction {rep.allowed_fraction:.3f})")

print("\nmartingale partial-sum envelope, 5000 simulated sequences:")
for kind in (MdsKind.RADEMACHER, MdsKind.BOUNDED_UNIFORM):
    rep, worst = lemma1_montecarlo(5000, 500, 0.05, kind, seed=1)
    print(f"  {kind.value:16s} escapes {rep.n_violations}/{rep.n_total}, "
          f"largest |partial sum| seen {worst.observed_max_partial_sum:.2f}")
