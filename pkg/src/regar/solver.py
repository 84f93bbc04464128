"""Alternating minimization of the regularized AR objective.

The outer loop alternates between the two convex subproblems (coefficients
with the signal fixed, signal with the coefficients fixed), each solved
approximately by the Douglas-Rachford algorithm on a prox pair.  The
quadratic prox runs either densely or through the FFT circulant embedding.
Janssen's exact missing-sample solve and its rectified GLP variant are the
two classic baselines, selectable as strategies of the same outer loop.
Optional accelerations: progressive inner-iteration schedules, extrapolation
of either update, and a line search along the extrapolation direction.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .armodel import ArCoefficients, build_toeplitz, coef_array, levinson_durbin, \
    objective
from .fastops import circulant_embed_filter, circulant_quadratic_prox, extend, \
    prox_regularizer_extended
from .prox import ConsistencySpec, dense_quadratic_prox, prox_signal_penalty, \
    soft_threshold
from .metrics import sdr
from .degrade import _as_bool_mask

__all__ = [
    "SolverConfig",
    "AcsStep",
    "AcsTrace",
    "DouglasRachfordDivergence",
    "CoefficientGrowthError",
    "douglas_rachford",
    "update_coefficients",
    "update_signal",
    "janssen_signal_update",
    "glp_rectify",
    "progressive_schedule",
    "extrapolate",
    "line_search",
    "acs_run",
]

STRATEGIES = ("inpaint", "glp", "declip", "dequant")
ACCELERATIONS = ("fft", "extrapolate_signal", "extrapolate_coefs", "line_search")

COEF_GROWTH_LIMIT = 1e6


class DouglasRachfordDivergence(RuntimeError):
    """A Douglas-Rachford iterate became non-finite."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at inner iteration {iteration}")
        self.iteration = iteration
        self.trace = None  # attached when raised from inside the outer loop


class CoefficientGrowthError(RuntimeError):
    """Coefficient magnitudes blew past the growth guard (raise lambda_c)."""

    def __init__(self, magnitude: float, trace: "AcsTrace"):
        super().__init__(
            f"coefficient magnitude {magnitude:.3g} exceeds {COEF_GROWTH_LIMIT:g}; "
            "the model is growing disproportionately, consider lambda_c > 0")
        self.trace = trace


def default_tau_grid() -> np.ndarray:
    """25 logarithmically spaced extrapolation steps in [1e-4, 100]."""
    return np.logspace(-4.0, 2.0, 25)


@dataclass(frozen=True)
class SolverConfig:
    """Everything the outer loop needs to know.

    ``inner_schedule`` fixes the Douglas-Rachford iteration count per outer
    iteration; when omitted it is the constant ``inner_iters``.  The
    ``acceleration`` set may contain "fft" (circulant-embedded quadratic
    proxes), "extrapolate_signal", "extrapolate_coefs" and "line_search";
    the line search replaces the fixed-step extrapolations and cannot be
    combined with them.
    """

    order: int
    strategy: str = "declip"
    lambda_c: float = 0.0
    lambda_s: float = math.inf
    gamma_c: float = 1.0
    gamma_s: float = 1.0
    outer_iters: int = 10
    inner_iters: int = 1000
    inner_schedule: tuple = None  # type: ignore[assignment]
    acceleration: frozenset = frozenset({"fft"})
    tau_grid: np.ndarray = field(default_factory=default_tau_grid)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("model order must be nonnegative")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.lambda_c < 0 or self.lambda_s < 0:
            raise ValueError("regularization weights must be nonnegative")
        if not (self.gamma_c > 0 and self.gamma_s > 0):
            raise ValueError("step sizes must be positive")
        if self.outer_iters < 1:
            raise ValueError("need at least one outer iteration")
        accel = frozenset(self.acceleration)
        unknown = accel - set(ACCELERATIONS)
        if unknown:
            raise ValueError(f"unknown acceleration options {sorted(unknown)}")
        if "line_search" in accel and accel & {"extrapolate_signal", "extrapolate_coefs"}:
            raise ValueError("line_search replaces the fixed extrapolations")
        object.__setattr__(self, "acceleration", accel)
        if self.inner_schedule is None:
            schedule = (int(self.inner_iters),) * self.outer_iters
        else:
            schedule = tuple(int(n) for n in self.inner_schedule)
        if len(schedule) != self.outer_iters:
            raise ValueError("inner schedule length must equal outer_iters")
        if any(n < 1 for n in schedule):
            raise ValueError("inner iteration counts must be >= 1")
        object.__setattr__(self, "inner_schedule", schedule)
        grid = np.asarray(self.tau_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
            raise ValueError("tau grid must be a nonempty vector of positive steps")
        object.__setattr__(self, "tau_grid", grid)


@dataclass(frozen=True)
class AcsStep:
    """Diagnostics recorded after one outer iteration."""

    outer_iter: int
    objective: float
    residual_term: float
    coef_term: float
    signal_term: float
    inner_iters: int
    wall_time: float
    coef_change: float
    sdr_db: float | None = None


@dataclass
class AcsTrace:
    entries: list
    aborted: str | None = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([e.objective for e in self.entries])


def douglas_rachford(prox_f, prox_g, z0, gamma: float, iters: int,
                     return_state: bool = False):
    """Douglas-Rachford splitting for min f + g given the two prox operators.

    The prox callables receive ``(v, gamma)`` and must evaluate the prox of
    the gamma-scaled function.  One iteration reads

        u_k = prox_g(z_k);  z_{k+1} = z_k + prox_f(2 u_k - z_k) - u_k,

    and the returned point is the final prox_g-side iterate, so an indicator
    g yields an exactly feasible result.  With ``return_state`` the final
    z is returned as well, enabling warm starts.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if iters < 1:
        raise ValueError("need at least one iteration")
    z = np.array(z0, dtype=float)
    u = None
    for k in range(iters):
        u = prox_g(z, gamma)
        z = z + prox_f(2.0 * u - z, gamma) - u
        if not np.all(np.isfinite(z)):
            raise DouglasRachfordDivergence(k + 1)
    return (u, z) if return_state else u


def _coef_quadratic(x: np.ndarray, p: int, gamma: float, use_fft: bool):
    """Prox of the coefficient-subproblem quadratic on the free part a_2..a_{p+1}.

    With a_1 pinned to 1, the residual splits as (column of x) + (shifted
    Toeplitz) @ free, so the quadratic prox carries the x column as a fixed
    offset.  Returns (prox, extended_dim) where extended_dim is None on the
    dense path.
    """
    n = x.size
    offset = np.concatenate((x, np.zeros(p)))
    shifted = np.concatenate(([0.0], x))
    if use_fft:
        op = circulant_embed_filter(shifted, n_head=p)
        apply = circulant_quadratic_prox(op, gamma, extend(offset, op.L))
        return apply, op.L
    T = build_toeplitz(shifted, p)
    return dense_quadratic_prox(T, gamma, offset), None


def _signal_quadratic(a: np.ndarray, n: int, gamma: float, use_fft: bool):
    """Prox of the signal-subproblem quadratic 1/2 ||A x||^2."""
    if use_fft:
        op = circulant_embed_filter(a, n_head=n)
        return circulant_quadratic_prox(op, gamma), op.L
    T = build_toeplitz(a, n)
    return dense_quadratic_prox(T, gamma), None


def update_coefficients(x, a_prev, cfg: SolverConfig, *, inner_iters: int | None = None,
                        state=None, return_state: bool = False):
    """One coefficient update: approximately minimize the residual plus l1 penalty.

    Runs Douglas-Rachford on the free coefficients with the quadratic prox on
    one side and the soft threshold on the other, warm-started at ``a_prev``
    (or at the carried DRA state from the previous outer iteration).  The
    configured step size is normalized by the signal energy, which keeps the
    inner convergence speed independent of the frame length and scale (the
    minimizer does not depend on the step size).
    """
    x = np.asarray(x, dtype=float)
    a_prev = coef_array(a_prev)
    p = cfg.order
    if a_prev.size != p + 1:
        raise ValueError("warm-start coefficients have the wrong order")
    if p == 0:
        result = ArCoefficients(np.ones(1))
        return (result, None) if return_state else result
    inner = int(inner_iters) if inner_iters is not None else cfg.inner_schedule[-1]
    energy = float(x @ x)
    gamma = cfg.gamma_c / energy if energy > 0 else cfg.gamma_c
    threshold = gamma * cfg.lambda_c
    use_fft = "fft" in cfg.acceleration
    quad, ext_dim = _coef_quadratic(x, p, gamma, use_fft)
    prox_f = lambda v, g: quad(v)
    if use_fft:
        prox_g = lambda v, g: prox_regularizer_extended(
            v, lambda h: soft_threshold(h, threshold), p)
        z0 = extend(a_prev[1:], ext_dim) if state is None else state
    else:
        prox_g = lambda v, g: soft_threshold(v, threshold)
        z0 = a_prev[1:].copy() if state is None else state
    u, z = douglas_rachford(prox_f, prox_g, z0, gamma, inner, return_state=True)
    coeffs = ArCoefficients.from_free(u[:p])
    return (coeffs, z) if return_state else coeffs


def update_signal(a, x_prev, cfg: SolverConfig, spec: ConsistencySpec, *,
                  inner_iters: int | None = None, state=None,
                  return_state: bool = False):
    """One signal update: approximately minimize the residual plus consistency penalty.

    Douglas-Rachford on the signal with the quadratic prox and the penalty
    prox (projection when lambda_s is inf).  The returned signal is the
    penalty-side iterate, hence exactly feasible in the hard-constrained
    case.  As in the coefficient update, the configured step size is
    normalized by the filter energy.
    """
    a = coef_array(a)
    if a[0] != 1.0:
        raise ValueError("first coefficient must be 1")
    x_prev = np.asarray(x_prev, dtype=float)
    n = x_prev.size
    if spec.n != n:
        raise ValueError("consistency spec length does not match the signal")
    inner = int(inner_iters) if inner_iters is not None else cfg.inner_schedule[-1]
    gamma = cfg.gamma_s / float(a @ a)
    weight = gamma * cfg.lambda_s
    penalty = lambda v: prox_signal_penalty(v, weight, spec)
    use_fft = "fft" in cfg.acceleration
    quad, ext_dim = _signal_quadratic(a, n, gamma, use_fft)
    prox_f = lambda v, g: quad(v)
    if use_fft:
        prox_g = lambda v, g: prox_regularizer_extended(v, penalty, n)
        z0 = extend(x_prev, ext_dim) if state is None else state
    else:
        prox_g = lambda v, g: penalty(v)
        z0 = x_prev.copy() if state is None else state
    u, z = douglas_rachford(prox_f, prox_g, z0, gamma, inner, return_state=True)
    x = u[:n]
    return (x, z) if return_state else x


def janssen_signal_update(a, y, reliable) -> np.ndarray:
    """Exact minimizer of the residual energy with the reliable samples fixed.

    Solves the positive-definite normal equations restricted to the missing
    coordinates; the Gram matrix of the AR convolution operator depends only
    on the autocorrelation of the coefficients, which keeps the assembly
    cheap and exact.
    """
    a = coef_array(a)
    y = np.asarray(y, dtype=float)
    n = y.size
    rel = _as_bool_mask(reliable, n)
    missing = np.flatnonzero(~rel)
    if missing.size == 0:
        return y.copy()
    p = a.size - 1
    acorr = np.correlate(a, a, mode="full")[p:]
    x_fixed = np.where(rel, y, 0.0)
    kernel = np.concatenate((acorr[::-1], acorr[1:]))
    gram_fixed = np.convolve(x_fixed, kernel)[p : p + n]
    rhs = -gram_fixed[missing]
    lags = np.abs(np.subtract.outer(missing, missing))
    gram = np.where(lags <= p, acorr[np.minimum(lags, p)], 0.0)
    factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=False)
    x = x_fixed.copy()
    x[missing] = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    return x


def glp_rectify(x, spec: ConsistencySpec) -> np.ndarray:
    """Rectification step of generalized linear prediction.

    Restores the reliable samples, then flips every sample that violates its
    clipping constraint around the respective +-theta level.  The result is
    always clipping-consistent.
    """
    if spec.variant != "declip":
        raise ValueError("rectification is defined for declip specs only")
    x = np.asarray(x, dtype=float)
    if x.shape != spec.y.shape:
        raise ValueError("signal and observation lengths differ")
    masks = spec.masks
    theta = spec.theta
    out = x.copy()
    out[masks.reliable] = spec.y[masks.reliable]
    flip_hi = masks.high & (x < theta)
    flip_lo = masks.low & (x > -theta)
    out[flip_hi] = 2.0 * theta - x[flip_hi]
    out[flip_lo] = -2.0 * theta - x[flip_lo]
    return out


def progressive_schedule(n1: float, n_last: float, outer_iters: int) -> np.ndarray:
    """Logarithmically spaced inner-iteration counts from 10**n1 to 10**n_last."""
    if outer_iters < 1:
        raise ValueError("need at least one outer iteration")
    if outer_iters == 1:
        return np.array([int(np.rint(10.0 ** n_last))])
    exponents = n1 + np.arange(outer_iters) / (outer_iters - 1) * (n_last - n1)
    return np.rint(10.0 ** exponents).astype(int)


def extrapolate(u_half, u_prev, tau: float, anchor_first: bool = False) -> np.ndarray:
    """Extrapolated update (1 + tau) u_half - tau u_prev.

    ``anchor_first`` re-pins the leading entry to 1 for coefficient vectors.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    u_half = np.asarray(u_half, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    if u_half.shape != u_prev.shape:
        raise ValueError("shapes differ")
    out = (1.0 + tau) * u_half - tau * u_prev
    if anchor_first:
        out[0] = 1.0
    return out


def line_search(a_half, a_prev, x_half, x_prev, objective_fn, tau_grid):
    """Joint extrapolation step chosen by sampling the objective over a tau grid.

    tau = 0 (no extrapolation) is always a candidate, so the returned pair is
    never worse than the plain update; ties resolve to the smallest tau.
    """
    a_half = np.asarray(a_half, dtype=float)
    a_prev = np.asarray(a_prev, dtype=float)
    x_half = np.asarray(x_half, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    taus = np.concatenate(([0.0], np.sort(np.asarray(tau_grid, dtype=float))))
    best = None
    for tau in taus:
        a_t = extrapolate(a_half, a_prev, tau, anchor_first=True)
        x_t = extrapolate(x_half, x_prev, tau)
        q = float(objective_fn(a_t, x_t))
        if best is None or q < best[0]:
            best = (q, a_t, x_t)
    return best[1], best[2]


def _reliable_mask(spec: ConsistencySpec) -> np.ndarray:
    if spec.masks is None:
        raise ValueError(f"strategy needs reliability masks, got a {spec.variant} spec")
    return spec.masks.reliable


def acs_run(observation, spec: ConsistencySpec, cfg: SolverConfig,
            ground_truth=None):
    """Run the full alternating solver on one frame.

    Starts from the observed signal (missing samples zero) and its classic AR
    fit, then alternates coefficient and signal updates for
    ``cfg.outer_iters`` iterations, applying the configured strategy and
    accelerations.  Returns the final coefficients, the reconstructed signal
    and the per-iteration trace.
    """
    y = np.asarray(observation, dtype=float)
    if spec.n != y.size:
        raise ValueError("consistency spec length does not match the observation")
    if cfg.strategy == "glp" and spec.variant != "declip":
        raise ValueError("the glp strategy needs a declip spec")
    if cfg.strategy in ("declip", "dequant") and spec.variant != cfg.strategy:
        raise ValueError(f"strategy {cfg.strategy!r} needs a matching spec, "
                         f"got {spec.variant!r}")
    if cfg.strategy in ("inpaint", "glp"):
        reliable = _reliable_mask(spec)
    total_iters = cfg.outer_iters
    use_linesearch = "line_search" in cfg.acceleration
    extra_sig = "extrapolate_signal" in cfg.acceleration
    extra_coef = "extrapolate_coefs" in cfg.acceleration

    x = y.copy()
    coeffs = levinson_durbin(x, cfg.order)
    z_coef = None
    z_sig = None
    entries = []

    def q_total(a_vec, x_vec) -> float:
        return objective(a_vec, x_vec, cfg.lambda_c, cfg.lambda_s, spec).total

    def signal_step(a_obj, x_cur, z_cur, inner):
        if cfg.strategy in ("declip", "dequant"):
            return update_signal(a_obj, x_cur, cfg, spec, inner_iters=inner,
                                 state=z_cur, return_state=True)
        x_new = janssen_signal_update(a_obj, y, reliable)
        if cfg.strategy == "glp":
            x_new = glp_rectify(x_new, spec)
        return x_new, z_cur

    for i in range(1, total_iters + 1):
        t_start = time.perf_counter()
        inner = cfg.inner_schedule[i - 1]
        a_prev_vec = coeffs.a
        x_prev = x
        try:
            a_half, z_coef = update_coefficients(x_prev, coeffs, cfg,
                                                 inner_iters=inner,
                                                 state=z_coef, return_state=True)
            if use_linesearch:
                x_half, z_sig = signal_step(a_half, x_prev, z_sig, inner)
                a_vec, x = line_search(a_half.a, a_prev_vec, x_half, x_prev,
                                       q_total, cfg.tau_grid)
                coeffs = ArCoefficients(a_vec)
            else:
                if extra_coef and total_iters > 1:
                    tau_c = 2.0 * (total_iters - i) / (total_iters - 1)
                    coeffs = ArCoefficients(
                        extrapolate(a_half.a, a_prev_vec, tau_c, anchor_first=True))
                else:
                    coeffs = a_half
                x_half, z_sig = signal_step(coeffs, x_prev, z_sig, inner)
                if extra_sig and total_iters > 1:
                    tau_s = (total_iters - i) / (total_iters - 1)
                    x = extrapolate(x_half, x_prev, tau_s)
                else:
                    x = x_half
        except DouglasRachfordDivergence as err:
            err.trace = AcsTrace(entries=entries,
                                 aborted=f"inner divergence at outer iteration {i}")
            raise
        wall = time.perf_counter() - t_start
        magnitude = float(np.max(np.abs(coeffs.a)))
        value = objective(coeffs, x, cfg.lambda_c, cfg.lambda_s, spec)
        change = float(np.linalg.norm(coeffs.a - a_prev_vec) / np.linalg.norm(coeffs.a))
        sdr_db = None
        if ground_truth is not None:
            sdr_db = sdr(ground_truth, x)
        entries.append(AcsStep(
            outer_iter=i,
            objective=value.total,
            residual_term=value.residual_term,
            coef_term=value.coef_term,
            signal_term=value.signal_term,
            inner_iters=inner,
            wall_time=wall,
            coef_change=change,
            sdr_db=sdr_db,
        ))
        if magnitude > COEF_GROWTH_LIMIT:
            trace = AcsTrace(entries=entries, aborted="coefficient growth")
            raise CoefficientGrowthError(magnitude, trace)
    return coeffs, x, AcsTrace(entries=entries)
