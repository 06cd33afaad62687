"""A first tour of the optimizer family on a noisy quadratic.

The coordinate-normalized variance-reduced method keeps a gradient
estimator m and a second moment v, and moves each coordinate by
eta * m_j / sqrt(v_j).  Setting beta2 = 0 collapses the normalization to a
pure sign step; the STORM-style correction term inside m is what separates
it from plain momentum.

Run:  python demos/01_optimizer_basics.py
"""

import numpy as np

from signstorm import (
    GradientPair,
    HyperParams,
    OptimizerKind,
    OptimizerState,
    make_rng,
    noisy_quadratic,
    step,
    storm_decomposition,
)

d = 5
problem = noisy_quadratic(d, np.ones(d), 0.3 * np.ones(d), np.linspace(0.5, 1.5, d))
hp = HyperParams(eta=0.05, beta1=0.9, beta2=0.81)
rng = make_rng(0)

print("stepping the variance-reduced method by hand:")
state = OptimizerState.initial(problem.constants.x_init)
for t in range(1, 6):
    noise = problem.draw_noise(rng)
    g_curr = problem.stoch_grad(state.x, noise)
    g_prev = problem.stoch_grad(state.prev_x, noise) if t > 1 else None
    pair = GradientPair(g_curr, g_prev)
    if t > 1:
        part_i, part_ii = storm_decomposition(state.m, pair, hp.beta1)
        print(f"  t={t}: momentum part {np.round(part_i, 3)}, "
              f"correction part {np.round(part_ii, 3)}")
    state = step(state, pair, hp)
    print(f"  t={t}: F(x) = {problem.value(state.x):.4f}, "
          f"||grad F||_1 = {np.sum(np.abs(problem.exact_grad(state.x))):.4f}")

print("\nsign-step degeneracy at beta2 = 0 (every move is exactly +-eta):")
hp0 = HyperParams(eta=0.05, beta1=0.9, beta2=0.0)
state = OptimizerState.initial(problem.constants.x_init)
prev_x = state.x.copy()
for t in range(1, 4):
    noise = problem.draw_noise(rng)
    pair = GradientPair(problem.stoch_grad(state.x, noise),
                        problem.stoch_grad(state.prev_x, noise) if t > 1 else None)
    state = step(state, pair, hp0)
    print(f"  t={t}: |dx| = {np.round(np.abs(state.x - prev_x), 6)}")
    prev_x = state.x.copy()

print("\nthe same state layout drives the baselines:")
for kind in (OptimizerKind.SGD, OptimizerKind.MOMENTUM_SGD, OptimizerKind.STORM,
             OptimizerKind.GENERALIZED_SIGN_SGD, OptimizerKind.ADAM,
             OptimizerKind.L2_NORMALIZED_STORM):
    state = OptimizerState.initial(problem.constants.x_init)
    rng_b = make_rng(1)
    base_hp = HyperParams.adam_defaults(0.05) if kind is OptimizerKind.ADAM else hp
    for t in range(1, 51):
        noise = problem.draw_noise(rng_b)
        pair = GradientPair(problem.stoch_grad(state.x, noise),
                            problem.stoch_grad(state.prev_x, noise) if t > 1 else None)
        state = step(state, pair, base_hp, kind)
    print(f"  {kind.value:24s} F(x_50) = {problem.value(state.x):.4f}")
