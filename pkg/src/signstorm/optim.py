"""Coordinate-wise optimizers built around the recursive variance-reduced estimator.

The central update (SignSTORM) keeps three vectors per run:

    m_t = g(x_t, noise_t)                                   at t = 1
    m_t = b1 * (m_{t-1} - g(x_{t-1}, noise_t)) + g(x_t, noise_t)   t >= 2
    v_t = b2 * v_{t-1} + (1 - b2) * m_t**2
    x_{t+1} = x_t - eta * m_t / (sqrt(v_t) + eps)

with all products, squares and quotients taken element-wise and the 0/0 = 0
convention applied per coordinate when the denominator vanishes.  The two
stochastic gradients inside the estimator are evaluated with the *same*
noise draw; that shared sample is what distinguishes the variance-reduced
recursion from plain momentum.

Baselines sharing the same state layout: SGD, momentum SGD, the
momentum-estimator sign method (``m = b1*m + (1-b1)*g`` with the same
v/x rules), the plain variance-reduced method (``x -= eta*m``), Adam with
bias correction, and an L2-normalized variant (``x -= eta*m/||m||_2``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue, UnsupportedKind


class Schedule(enum.Enum):
    """Step-size schedule: a fixed eta, or eta / sqrt(t) at iteration t."""

    CONSTANT = "constant"
    PER_STEP_SQRT_T = "per_step_sqrt_t"


class OptimizerKind(enum.Enum):
    SIGNSTORM = "signstorm"
    SGD = "sgd"
    MOMENTUM_SGD = "momentum_sgd"
    GENERALIZED_SIGN_SGD = "generalized_sign_sgd"
    STORM = "storm"
    ADAM = "adam"
    L2_NORMALIZED_STORM = "l2_normalized_storm"


# Kinds whose estimator needs g_prev evaluated at the previous iterate.
STORM_FAMILY = frozenset(
    {OptimizerKind.SIGNSTORM, OptimizerKind.STORM, OptimizerKind.L2_NORMALIZED_STORM}
)


@dataclass(frozen=True, slots=True)
class HyperParams:
    """Step size, momentum factors, denominator guard and schedule.

    ``eta`` is the full step size under the constant schedule; under
    ``PER_STEP_SQRT_T`` it is the numerator scale and iteration t uses
    ``eta / sqrt(t)``.
    """

    eta: float
    beta1: float
    beta2: float
    eps_guard: float = 0.0
    schedule: Schedule = Schedule.CONSTANT

    def __post_init__(self) -> None:
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be a finite positive real, got {self.eta}")
        if not (0.0 <= self.beta1 < 1.0):
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not (0.0 <= self.beta2 < 1.0):
            raise ValueError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if not (self.eps_guard >= 0.0):
            raise ValueError(f"eps_guard must be >= 0, got {self.eps_guard}")

    @property
    def rho(self) -> float:
        """sqrt(beta2)/beta1, with 0/0 = 0; +inf when beta1 = 0 < beta2."""
        root = math.sqrt(self.beta2)
        if self.beta1 == 0.0:
            return 0.0 if root == 0.0 else math.inf
        return root / self.beta1

    def step_size(self, t: int) -> float:
        if self.schedule is Schedule.PER_STEP_SQRT_T:
            return self.eta / math.sqrt(t)
        return self.eta

    @staticmethod
    def adam_defaults(eta: float) -> "HyperParams":
        """Standard Adam configuration (b1, b2, eps) = (0.9, 0.999, 1e-8)."""
        return HyperParams(eta=eta, beta1=0.9, beta2=0.999, eps_guard=1e-8)


@dataclass(slots=True)
class OptimizerState:
    """Iterate, estimator, second moment, previous iterate and step counter.

    ``t`` is the index of the next iteration to execute (1-based); the
    fresh state therefore carries t = 1, v = 0 and an unset estimator.
    """

    x: np.ndarray
    m: np.ndarray
    v: np.ndarray
    prev_x: np.ndarray
    t: int

    @classmethod
    def initial(cls, x0: np.ndarray) -> "OptimizerState":
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.ndim != 1 or x0.size < 1:
            raise DimensionMismatch(f"initial point must be a 1-d vector, got shape {x0.shape}")
        if not np.all(np.isfinite(x0)):
            raise NonFiniteValue("initial point contains NaN/Inf")
        return cls(x=x0.copy(), m=np.zeros_like(x0), v=np.zeros_like(x0), prev_x=x0.copy(), t=1)

    @property
    def d(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True, slots=True)
class GradientPair:
    """Stochastic gradients at the current and previous iterate, same noise draw.

    ``g_prev`` may be omitted at t = 1 where the estimator ignores it.
    """

    g_curr: np.ndarray
    g_prev: np.ndarray | None = None


def _check_dims(state: OptimizerState, grads: GradientPair, need_prev: bool) -> None:
    d = state.d
    if grads.g_curr.shape != (d,):
        raise DimensionMismatch(
            f"g_curr has shape {grads.g_curr.shape}, state dimension is {d}"
        )
    if need_prev:
        if grads.g_prev is None:
            raise ValueError("g_prev is required by the variance-reduced estimator for t >= 2")
        if grads.g_prev.shape != (d,):
            raise DimensionMismatch(
                f"g_prev has shape {grads.g_prev.shape}, state dimension is {d}"
            )


def _check_finite(**arrays: np.ndarray) -> None:
    # one reduction per array on the fast path; infinities never cancel to a
    # finite sum in IEEE arithmetic, so only an all-finite overflow (values
    # near 1e308) can reach the precise fallback
    total = 0.0
    for arr in arrays.values():
        total += float(np.add.reduce(arr))
    if math.isfinite(total):
        return
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue(f"{name} contains NaN/Inf after the update")


def _guarded_ratio(m: np.ndarray, v: np.ndarray, eps_guard: float) -> np.ndarray:
    """m / (sqrt(v) + eps), element-wise, with 0/0 = 0 where the denominator is 0.

    Zero-denominator lanes are masked out of the division, so finite inputs
    never trip numpy warnings; non-finite inputs may, and then the caller's
    finite check raises.
    """
    denom = np.sqrt(v)
    if eps_guard != 0.0:
        denom += eps_guard
    out = np.zeros_like(m)
    np.divide(m, denom, out=out, where=denom > 0.0)
    return out


def _storm_estimator(state: OptimizerState, grads: GradientPair, beta1: float) -> np.ndarray:
    if state.t == 1:
        return grads.g_curr.copy()
    m = state.m - grads.g_prev
    m *= beta1
    m += grads.g_curr
    return m


def _second_moment(v_prev: np.ndarray, m: np.ndarray, beta2: float) -> np.ndarray:
    v = v_prev * beta2
    mm = m * m
    mm *= 1.0 - beta2
    v += mm
    return v


def step_signstorm(
    state: OptimizerState, grads: GradientPair, hp: HyperParams
) -> OptimizerState:
    """Advance one iteration of the coordinate-normalized variance-reduced method.

    Returns a fresh state; the input state is left untouched and shares no
    arrays with the output.
    """
    _check_dims(state, grads, need_prev=state.t > 1)
    m = _storm_estimator(state, grads, hp.beta1)
    v = _second_moment(state.v, m, hp.beta2)
    ratio = _guarded_ratio(m, v, hp.eps_guard)
    ratio *= -hp.step_size(state.t)
    ratio += state.x
    x = ratio
    _check_finite(x=x, m=m, v=v)
    return OptimizerState(x=x, m=m, v=v, prev_x=state.x.copy(), t=state.t + 1)


def step_baseline(
    state: OptimizerState,
    grads: GradientPair,
    hp: HyperParams,
    kind: OptimizerKind,
) -> OptimizerState:
    """One iteration of the named baseline over the shared state layout."""
    if not isinstance(kind, OptimizerKind) or kind is OptimizerKind.SIGNSTORM:
        raise UnsupportedKind(f"not a baseline kind: {kind!r}")
    _check_dims(state, grads, need_prev=kind in STORM_FAMILY and state.t > 1)
    eta = hp.step_size(state.t)
    g = grads.g_curr

    if kind is OptimizerKind.SGD:
        m = g.copy()
        v = state.v.copy()
        x = state.x - eta * m
    elif kind is OptimizerKind.MOMENTUM_SGD:
        m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
        v = state.v.copy()
        x = state.x - eta * m
    elif kind is OptimizerKind.GENERALIZED_SIGN_SGD:
        m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
        v = _second_moment(state.v, m, hp.beta2)
        x = state.x - eta * _guarded_ratio(m, v, hp.eps_guard)
    elif kind is OptimizerKind.STORM:
        m = _storm_estimator(state, grads, hp.beta1)
        v = state.v.copy()
        x = state.x - eta * m
    elif kind is OptimizerKind.ADAM:
        m = hp.beta1 * state.m + (1.0 - hp.beta1) * g
        v = hp.beta2 * state.v + (1.0 - hp.beta2) * g * g
        m_hat = m / (1.0 - hp.beta1 ** state.t)
        v_hat = v / (1.0 - hp.beta2 ** state.t)
        x = state.x - eta * _guarded_ratio(m_hat, v_hat, hp.eps_guard)
    elif kind is OptimizerKind.L2_NORMALIZED_STORM:
        m = _storm_estimator(state, grads, hp.beta1)
        v = state.v.copy()
        norm = float(np.linalg.norm(m))
        x = state.x - eta * m / norm if norm > 0.0 else state.x.copy()
    else:  # pragma: no cover - enum is closed
        raise UnsupportedKind(f"unhandled kind: {kind!r}")

    _check_finite(x=x, m=m, v=v)
    return OptimizerState(x=x, m=m, v=v, prev_x=state.x.copy(), t=state.t + 1)


def step(
    state: OptimizerState,
    grads: GradientPair,
    hp: HyperParams,
    kind: OptimizerKind = OptimizerKind.SIGNSTORM,
) -> OptimizerState:
    """Dispatch to :func:`step_signstorm` or :func:`step_baseline`."""
    if kind is OptimizerKind.SIGNSTORM:
        return step_signstorm(state, grads, hp)
    return step_baseline(state, grads, hp, kind)


def storm_decomposition(
    m_prev: np.ndarray, g: GradientPair, beta1: float
) -> tuple[np.ndarray, np.ndarray]:
    """Split the variance-reduced estimator into its momentum and correction parts.

    part_i  = b1 * m_prev + (1 - b1) * g_curr      (plain momentum average)
    part_ii = b1 * (g_curr - g_prev)               (variance-reduction correction)

    Their sum equals the t >= 2 estimator b1*(m_prev - g_prev) + g_curr.
    """
    if g.g_prev is None:
        raise ValueError("decomposition needs both gradients of the shared-sample pair")
    if not (m_prev.shape == g.g_curr.shape == g.g_prev.shape):
        raise DimensionMismatch(
            f"shapes disagree: m_prev {m_prev.shape}, g_curr {g.g_curr.shape}, "
            f"g_prev {g.g_prev.shape}"
        )
    part_i = beta1 * m_prev + (1.0 - beta1) * g.g_curr
    part_ii = beta1 * (g.g_curr - g.g_prev)
    return part_i, part_ii
