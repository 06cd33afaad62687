"""Synthetic stochastic objectives with certified constants.

Every problem carries an exact-gradient oracle next to the sampled one and
declares the constants its contracts promise:

* ``delta_upper``  — gap between the initial value and the global minimum
  (an analytic upper bound when the minimizer is unknown);
* ``L_vec``        — per-coordinate smoothness constants, stored in the
  normalized convention ``|d_j f(x) - d_j f(y)| <= (L_j / sqrt(d)) ||x - y||_2``;
* ``sigma_vec``    — almost-sure per-coordinate bounds on the gradient noise.

Two noise models are bundled.  Additive problems perturb the exact gradient
by per-coordinate uniform draws on [-sigma_j, sigma_j]; the perturbation is
independent of the query point, so one realization evaluated at two points
shifts both gradients by the same vector.  Finite-sum problems draw a data
index; their noise support is enumerable, which lets the verifier check
unbiasedness exactly.
"""

from __future__ import annotations

import abc
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConstant

# Largest |second derivative| of u -> u^2/(1+u^2), attained at u = 0.
_BOUNDED_CURVATURE = 2.0


def _sigmoid(z) -> np.ndarray:
    """Logistic function, stable for large |z|."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class NoiseRealization:
    """One frozen draw of the gradient noise.

    ``payload`` is either the per-coordinate additive noise vector or a data
    index; it fully determines the stochastic gradient map x -> grad f(x, Xi).
    """

    sample_id: int
    payload: np.ndarray | int


@dataclass(frozen=True)
class ProblemConstants:
    delta_upper: float
    L_vec: np.ndarray
    sigma_vec: np.ndarray
    x_init: np.ndarray
    x_star: np.ndarray | None = None

    def __post_init__(self) -> None:
        if np.any(self.L_vec <= 0):
            raise InvalidConstant("every smoothness constant L_j must be positive")
        if np.any(self.sigma_vec < 0):
            raise InvalidConstant("noise bounds sigma_j must be nonnegative")
        if self.delta_upper < 0:
            raise InvalidConstant("delta_upper must be nonnegative")

    @property
    def L1_norm(self) -> float:
        return float(np.sum(self.L_vec))

    @property
    def sigma1_norm(self) -> float:
        return float(np.sum(self.sigma_vec))


class StochasticProblem(abc.ABC):
    """Objective F(x) = E[f(x, Xi)] with sampled and exact gradient oracles."""

    name: str
    d: int
    constants: ProblemConstants

    @abc.abstractmethod
    def draw_noise(self, rng: np.random.Generator) -> NoiseRealization: ...

    @abc.abstractmethod
    def stoch_grad(self, x: np.ndarray, xi: NoiseRealization) -> np.ndarray: ...

    @abc.abstractmethod
    def exact_grad(self, x: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def value(self, x: np.ndarray) -> float: ...

    def noise_support(self) -> list[NoiseRealization] | None:
        """All realizations when the noise distribution is finite, else None."""
        return None

    def presample_payloads(self, rng: np.random.Generator, n: int) -> np.ndarray | None:
        """Batch of n additive-noise payload rows, or None when noise is not additive.

        Must consume the generator exactly like n draw_noise calls so batched
        and per-step trials share one stream.
        """
        return None


class _AdditiveNoiseProblem(StochasticProblem):
    """Noise enters as an x-independent additive perturbation of the gradient."""

    def draw_noise(self, rng: np.random.Generator) -> NoiseRealization:
        sigma = self.constants.sigma_vec
        payload = rng.uniform(-sigma, sigma)
        return NoiseRealization(zlib.crc32(payload.tobytes()), payload)

    def presample_payloads(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # numpy fills row-major, so one (n, d) draw equals n sequential (d,) draws
        sigma = self.constants.sigma_vec
        return rng.uniform(-sigma, sigma, size=(n, self.d))

    def stoch_grad(self, x: np.ndarray, xi: NoiseRealization) -> np.ndarray:
        return self.exact_grad(x) + xi.payload


class NoisyQuadratic(_AdditiveNoiseProblem):
    """F(x) = 1/2 sum_j h_j x_j^2 with uniform additive gradient noise."""

    name = "noisy_quadratic"

    def __init__(self, d: int, hessian_diag: np.ndarray, sigma_vec: np.ndarray,
                 x_init: np.ndarray):
        h = np.asarray(hessian_diag, dtype=np.float64)
        sigma = np.asarray(sigma_vec, dtype=np.float64)
        x0 = np.asarray(x_init, dtype=np.float64)
        if not (h.shape == sigma.shape == x0.shape == (d,)):
            raise InvalidConstant(f"expected three vectors of length d={d}")
        if np.any(h <= 0):
            raise InvalidConstant("hessian diagonal entries must be positive")
        self.d = d
        self.h = h
        self.constants = ProblemConstants(
            delta_upper=0.5 * float((h * x0) @ x0),
            L_vec=h * np.sqrt(d),
            sigma_vec=sigma,
            x_init=x0.copy(),
            x_star=np.zeros(d),
        )

    def exact_grad(self, x: np.ndarray) -> np.ndarray:
        return self.h * x

    def value(self, x: np.ndarray) -> float:
        return 0.5 * float((self.h * x) @ x)


class BoundedNonConvex(_AdditiveNoiseProblem):
    """F(x) = sum_j a_j x_j^2 / (1 + x_j^2): flat tails make it non-convex.

    The per-coordinate curvature of u^2/(1+u^2) is 2(1-3u^2)/(1+u^2)^3,
    maximal in magnitude at u = 0 with value 2, hence L_j = 2 a_j sqrt(d).
    """

    name = "bounded_nonconvex"

    def __init__(self, d: int, a_vec: np.ndarray, sigma_vec: np.ndarray,
                 x_init: np.ndarray):
        a = np.asarray(a_vec, dtype=np.float64)
        sigma = np.asarray(sigma_vec, dtype=np.float64)
        x0 = np.asarray(x_init, dtype=np.float64)
        if not (a.shape == sigma.shape == x0.shape == (d,)):
            raise InvalidConstant(f"expected three vectors of length d={d}")
        if np.any(a <= 0):
            raise InvalidConstant("scale entries a_j must be positive")
        self.d = d
        self.a = a
        self.constants = ProblemConstants(
            delta_upper=float(np.sum(a * x0 * x0 / (1.0 + x0 * x0))),
            L_vec=_BOUNDED_CURVATURE * a * np.sqrt(d),
            sigma_vec=sigma,
            x_init=x0.copy(),
            x_star=np.zeros(d),
        )

    def exact_grad(self, x: np.ndarray) -> np.ndarray:
        return self.a * 2.0 * x / (1.0 + x * x) ** 2

    def value(self, x: np.ndarray) -> float:
        return float(np.sum(self.a * x * x / (1.0 + x * x)))


class SyntheticLogistic(StochasticProblem):
    """Finite-sum logistic loss over generated bounded features.

    f(x, i) = log(1 + exp(-y_i <w_i, x>)) with the index i drawn uniformly.
    Since the per-sample gradient is -y_i w_i s(-y_i <w_i, x>) with the
    logistic sigmoid s in (0, 1), both it and the full gradient are bounded
    coordinate-wise by max_i |w_ij|, giving sigma_j = 2 max_i |w_ij|; the
    sigmoid being 1/4-Lipschitz gives L_j = sqrt(d)/4 * max_i |w_ij| ||w_i||_2.
    """

    name = "synthetic_logistic"

    def __init__(self, d: int, n_samples: int, feature_bound: float,
                 x_init: np.ndarray, seed: int = 0):
        if n_samples < 1:
            raise InvalidConstant("need at least one sample")
        if not feature_bound > 0:
            raise InvalidConstant("feature_bound must be positive")
        x0 = np.asarray(x_init, dtype=np.float64)
        if x0.shape != (d,):
            raise InvalidConstant(f"x_init must have length d={d}")
        rng = np.random.default_rng(seed)
        self.d = d
        self.n_samples = n_samples
        self.features = rng.uniform(-feature_bound, feature_bound, size=(n_samples, d))
        self.labels = rng.choice([-1.0, 1.0], size=n_samples)
        abs_w_max = np.max(np.abs(self.features), axis=0)
        row_norms = np.linalg.norm(self.features, axis=1)
        self.constants = ProblemConstants(
            # F >= 0 everywhere, so F(x_init) upper-bounds the gap to the minimum.
            delta_upper=self._full_value(x0),
            L_vec=np.sqrt(d) / 4.0 * np.max(np.abs(self.features) * row_norms[:, None], axis=0),
            sigma_vec=2.0 * abs_w_max,
            x_init=x0.copy(),
            x_star=None,
        )

    def _margins(self, x: np.ndarray) -> np.ndarray:
        return self.labels * (self.features @ x)

    def _full_value(self, x: np.ndarray) -> float:
        return float(np.mean(np.logaddexp(0.0, -self._margins(x))))

    def draw_noise(self, rng: np.random.Generator) -> NoiseRealization:
        idx = int(rng.integers(0, self.n_samples))
        return NoiseRealization(idx, idx)

    def noise_support(self) -> list[NoiseRealization]:
        return [NoiseRealization(i, i) for i in range(self.n_samples)]

    def _sample_grad(self, x: np.ndarray, i: int) -> np.ndarray:
        z = -self.labels[i] * float(self.features[i] @ x)
        return -self.labels[i] * self.features[i] * float(_sigmoid(z)[0])

    def stoch_grad(self, x: np.ndarray, xi: NoiseRealization) -> np.ndarray:
        return self._sample_grad(x, xi.payload)

    def exact_grad(self, x: np.ndarray) -> np.ndarray:
        s = _sigmoid(-self._margins(x))
        return np.mean((-self.labels * s)[:, None] * self.features, axis=0)

    def value(self, x: np.ndarray) -> float:
        return self._full_value(x)


def noisy_quadratic(d: int, hessian_diag, sigma_vec, x_init) -> NoisyQuadratic:
    return NoisyQuadratic(d, hessian_diag, sigma_vec, x_init)


def bounded_nonconvex(d: int, a_vec, sigma_vec, x_init) -> BoundedNonConvex:
    return BoundedNonConvex(d, a_vec, sigma_vec, x_init)


def synthetic_logistic(d: int, n_samples: int, feature_bound: float, x_init,
                       seed: int = 0) -> SyntheticLogistic:
    return SyntheticLogistic(d, n_samples, feature_bound, x_init, seed=seed)


def _as_vec(value, d: int) -> np.ndarray:
    """Broadcast a scalar to length d; pass vectors through."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(d, float(arr))
    return arr


def make_problem(name: str, params: dict) -> StochasticProblem:
    """Construct a bundled problem from its name and a parameter map."""
    p = dict(params)
    try:
        d = int(p.pop("d"))
    except KeyError as exc:
        raise InvalidConstant("problem params need a dimension 'd'") from exc
    if name == "noisy_quadratic":
        out = NoisyQuadratic(d, _as_vec(p.pop("hessian_diag", 1.0), d),
                             _as_vec(p.pop("sigma", 0.0), d),
                             _as_vec(p.pop("x_init", 1.0), d))
    elif name == "bounded_nonconvex":
        out = BoundedNonConvex(d, _as_vec(p.pop("a", 1.0), d),
                               _as_vec(p.pop("sigma", 0.0), d),
                               _as_vec(p.pop("x_init", 1.0), d))
    elif name == "synthetic_logistic":
        out = SyntheticLogistic(d, int(p.pop("n_samples", 32)),
                                float(p.pop("feature_bound", 1.0)),
                                _as_vec(p.pop("x_init", 0.0), d),
                                seed=int(p.pop("data_seed", 0)))
    else:
        raise InvalidConstant(f"unknown problem name {name!r}")
    if p:
        raise InvalidConstant(f"unknown problem parameters: {sorted(p)}")
    return out


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    worst_ratio: float
    detail: str = ""


@dataclass
class AssumptionReport:
    unbiasedness: AssumptionCheck
    noise_bound: AssumptionCheck
    smoothness: AssumptionCheck

    @property
    def all_passed(self) -> bool:
        return self.unbiasedness.passed and self.noise_bound.passed and self.smoothness.passed

    def checks(self) -> list[AssumptionCheck]:
        return [self.unbiasedness, self.noise_bound, self.smoothness]


def _probe_points(problem: StochasticProblem, rng: np.random.Generator, n: int) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(problem.constants.x_init))))
    return rng.standard_normal((n, problem.d)) * scale


def verify_assumptions(problem: StochasticProblem, n_probes: int,
                       rng: np.random.Generator) -> AssumptionReport:
    """Empirically stress the declared problem contracts.

    Checks, each reported with its worst observed ratio (pass iff <= 1):

    * unbiasedness — the averaged sampled gradient matches the exact one;
      exact enumeration when the noise support is finite, otherwise a Monte
      Carlo mean against a 5-standard-error envelope;
    * noise bound — max_j |noise_j| / sigma_j over fresh draws (0/0 counts
      as 0);
    * smoothness — max_j |d_j f(x,Xi) - d_j f(y,Xi)| sqrt(d) / (L_j ||x-y||_2)
      over random point pairs sharing one realization.
    """
    if n_probes < 1:
        raise InvalidConstant("n_probes must be >= 1")
    consts = problem.constants
    sigma = consts.sigma_vec
    support = problem.noise_support()

    # (a) unbiasedness
    points = _probe_points(problem, rng, 5)
    worst = 0.0
    if support is not None:
        for x in points:
            mean = np.mean([problem.stoch_grad(x, xi) for xi in support], axis=0)
            gap = np.max(np.abs(mean - problem.exact_grad(x)))
            tol = 1e-12 * (1.0 + float(np.max(np.abs(problem.exact_grad(x)))))
            worst = max(worst, gap / tol)
        detail = f"exhaustive average over {len(support)} realizations at 5 points"
    else:
        for x in points:
            exact = problem.exact_grad(x)
            acc = np.zeros(problem.d)
            for _ in range(n_probes):
                acc += problem.stoch_grad(x, problem.draw_noise(rng)) - exact
            gap = np.abs(acc / n_probes)
            tol = 5.0 * sigma / np.sqrt(n_probes) + 1e-12
            worst = max(worst, float(np.max(gap / tol)))
        detail = f"Monte Carlo mean over {n_probes} draws at 5 points, 5-sigma envelope"
    unbiasedness = AssumptionCheck("unbiasedness", worst <= 1.0, worst, detail)

    # (b) almost-sure noise bound
    worst = 0.0
    for x in _probe_points(problem, rng, n_probes):
        noise = np.abs(problem.stoch_grad(x, problem.draw_noise(rng)) - problem.exact_grad(x))
        ratio = np.zeros(problem.d)
        np.divide(noise, sigma, out=ratio, where=sigma > 0)
        ratio[(sigma == 0) & (noise > 0)] = np.inf
        worst = max(worst, float(np.max(ratio)))
    noise_bound = AssumptionCheck(
        "noise_bound", worst <= 1.0, worst, f"{n_probes} fresh draws")

    # (c) per-coordinate smoothness in the L_j / sqrt(d) convention
    worst = 0.0
    sqrt_d = np.sqrt(problem.d)
    xs = _probe_points(problem, rng, n_probes)
    ys = _probe_points(problem, rng, n_probes)
    for x, y in zip(xs, ys):
        dist = float(np.linalg.norm(x - y))
        if dist == 0.0:
            continue
        xi = problem.draw_noise(rng)
        diff = np.abs(problem.stoch_grad(x, xi) - problem.stoch_grad(y, xi))
        worst = max(worst, float(np.max(diff * sqrt_d / (consts.L_vec * dist))))
    smoothness = AssumptionCheck(
        "smoothness", worst <= 1.0, worst, f"{n_probes} random point pairs")

    return AssumptionReport(unbiasedness, noise_bound, smoothness)
