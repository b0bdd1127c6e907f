"""Lyapunov estimation, critical-parameter solving, and decay-law fitting.

The central quantity is the input-conditioned Lyapunov exponent: the
asymptotic log-rate at which two trajectories with infinitesimally close
initial states separate under one and the same input sequence.  Negative
means the input is forgotten exponentially, zero marks critical dynamics
with power-law forgetting, positive means the echo-state property is lost
for that input.

Estimators
----------
- :func:`lyapunov_renormalized`: Benettin-style two-trajectory method; a
  companion trajectory is kept at separation ``d0`` by renormalizing it
  onto the current difference direction after every step, and the
  exponent is the mean per-step log growth.
- :func:`lyapunov_derivative_product`: exact tangent-dynamics average for
  one-neuron systems, ``mean log |W * slope(y_lin_t)|``; serves as the
  independent cross-check oracle for the renormalized method.
- :func:`expected_orbit_rate`: tangent growth rate of the tanh baseline
  when the state is held on the expected critical orbit while the input
  amplitude is scaled; this is the quantity that turns positive the
  moment the input is louder than expected.  (The free-running exponent
  cannot show this: off the expected orbit the baseline falls onto a
  strongly contracting large-amplitude orbit and the asymptotic rate is
  dominated by that attractor.)

Batched variants of the one-neuron estimators evaluate whole parameter
grids in one vectorized run; element results are identical to the scalar
path regardless of how a grid is chunked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .signals import InputSequence, generate, rng_stream, STREAM_DIRECTION

__all__ = [
    "LyapunovEstimate",
    "DistanceSeries",
    "DecayFit",
    "CriticalPoint",
    "lyapunov_renormalized",
    "lyapunov_derivative_product",
    "renormalized_scalar_batch",
    "derivative_product_scalar_batch",
    "expected_orbit_rate",
    "solve_critical_b",
    "fit_power_law",
    "fit_exponential",
    "classify_decay",
    "loglog_bend",
]

_BATCHES = 20  # batch-mean count for the standard error
_FLOOR = 1e-13  # distances below this are floating-point noise for fits


@dataclass(frozen=True)
class LyapunovEstimate:
    """Estimated exponent (nats per step) plus estimation diagnostics."""

    lam: float
    method: str
    steps_used: int
    washout: int
    d0: Optional[float]
    stderr: float


@dataclass
class DistanceSeries:
    """Distance between two trajectories, per step.

    ``truncated_at`` is the step at which the distance reached exactly
    zero, after which the trajectories are identical and recording stops.
    """

    t: np.ndarray
    d: np.ndarray
    truncated_at: Optional[int] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=int)
        self.d = np.asarray(self.d, dtype=float)
        if self.t.shape != self.d.shape:
            raise ValueError("t and d must have matching shapes")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("step indices must increase strictly")
        if np.any(self.d < 0.0):
            raise ValueError("distances must be nonnegative")


@dataclass(frozen=True)
class DecayFit:
    """Fitted decay law of a distance series.

    Exactly one of ``c_a`` (power-law exponent) and ``c_b`` (per-step
    exponential base) is set unless the classification is inconclusive.
    """

    law: str  # "power_law" | "exponential" | "inconclusive"
    c_a: Optional[float]
    c_b: Optional[float]
    r2_loglog: float
    r2_semilog: float
    window: tuple[int, int]
    truncated_at: Optional[int] = None


@dataclass(frozen=True)
class CriticalPoint:
    """Solution of the period-2 criticality system of the tanh baseline.

    ``b_star`` is the recurrent gain at which the orbit of amplitude
    ``s_star`` has per-step tangent magnitude exactly 1; ``residuals``
    are the absolute defects of the two defining equations.
    """

    b_star: float
    s_star: float
    residuals: tuple[float, float]


# -- renormalized (Benettin) estimation --------------------------------------


def _finalize(logs: np.ndarray, washout: int):
    post = logs[washout:]
    q = (post.shape[0] // _BATCHES) * _BATCHES
    post = post[:q]
    squeeze = post.ndim == 1
    if squeeze:
        post = post[:, None]
    # Reduce along contiguous per-element rows: each element's mean then
    # depends only on its own log sequence, never on the batch width, so
    # grid results are identical for any chunking of the grid.
    rows = np.ascontiguousarray(post.T)
    lam = rows.mean(axis=1)
    batches = rows.reshape(rows.shape[0], _BATCHES, q // _BATCHES).mean(axis=2)
    stderr = batches.std(axis=1, ddof=1) / math.sqrt(_BATCHES)
    if squeeze:
        return float(lam[0]), float(stderr[0]), q
    return lam, stderr, q


def lyapunov_renormalized(
    reservoir,
    inputs,
    d0: float = 1e-9,
    washout: int = 1000,
    seed: int = 0,
) -> LyapunovEstimate:
    """Renormalized two-trajectory exponent for an arbitrary reservoir.

    A companion trajectory starts at separation ``d0`` along a seeded
    random unit direction; after every step the log of the separation
    ratio is accumulated and the companion is pulled back to distance
    ``d0`` along the current difference direction.  The estimate is the
    mean post-washout log rate; the standard error comes from 20 batch
    means.
    """
    if not (1e-12 <= d0 <= 1e-6):
        raise ValueError("d0 must lie in [1e-12, 1e-6]")
    if isinstance(inputs, InputSequence):
        inputs = generate(inputs)
    inputs = np.asarray(inputs, dtype=float)
    steps = len(inputs)
    if steps < washout + 1000:
        raise ValueError("input too short: need at least washout + 1000 steps")

    ref = reservoir.copy()
    direction = rng_stream(seed, STREAM_DIRECTION).standard_normal(ref.k)
    direction /= np.linalg.norm(direction)
    twin = reservoir.copy(state=ref.state + d0 * direction)

    logs = np.empty(steps)
    with np.errstate(divide="ignore"):
        for t in range(steps):
            ref.step(inputs[t])
            twin.step(inputs[t])
            delta = twin.state - ref.state
            dist = float(np.linalg.norm(delta))
            logs[t] = np.log(dist / d0)
            if dist > 0.0:
                twin.state = ref.state + delta * (d0 / dist)
            else:
                twin.state = ref.state + d0 * direction
    lam, stderr, used = _finalize(logs, washout)
    return LyapunovEstimate(
        lam=float(lam),
        method="renormalized",
        steps_used=used,
        washout=washout,
        d0=d0,
        stderr=float(stderr),
    )


def lyapunov_derivative_product(reservoir, inputs, washout: int = 1000) -> LyapunovEstimate:
    """Exact tangent average ``mean log |W * slope(y_lin_t)|`` for k = 1.

    Runs the single trajectory and averages the log tangent factor; for
    one-neuron systems this is the exponent without any finite-separation
    approximation, which makes it the oracle the renormalized estimator
    is checked against.
    """
    if reservoir.k != 1:
        raise ValueError("derivative-product estimation requires a one-neuron reservoir")
    if isinstance(inputs, InputSequence):
        inputs = generate(inputs)
    inputs = np.asarray(inputs, dtype=float)
    steps = len(inputs)
    if steps < washout + 1000:
        raise ValueError("input too short: need at least washout + 1000 steps")

    work = reservoir.copy()
    gain = abs(float(work.W[0, 0]))
    logs = np.empty(steps)
    with np.errstate(divide="ignore"):
        for t in range(steps):
            rec = work.step(inputs[t])
            logs[t] = np.log(gain * float(rec.slopes[0]))
    lam, stderr, used = _finalize(logs, washout)
    return LyapunovEstimate(
        lam=float(lam),
        method="derivative_product",
        steps_used=used,
        washout=washout,
        d0=None,
        stderr=float(stderr),
    )


# -- batched one-neuron engines ----------------------------------------------


def _batch_inputs(u, m: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        return u[:, None]
    if u.shape[1] not in (1, m):
        raise ValueError("per-element input width must be 1 or match the batch")
    return u


def renormalized_scalar_batch(
    w,
    w_in,
    u,
    transfer,
    *,
    d0: float = 1e-9,
    washout: int = 1000,
    y0=0.0,
    direction: float = 1.0,
):
    """Vectorized renormalized estimation for a batch of one-neuron systems.

    ``w`` and ``w_in`` are the recurrent and input gains per batch
    element; ``u`` is the shared input (T,) or per-element input (T, m);
    all elements share ``transfer``.  Returns (lambda, stderr) arrays.
    Elements evolve independently and elementwise, so results do not
    depend on how a grid is split into batches.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    m = w.size
    win = np.broadcast_to(np.asarray(w_in, dtype=float), (m,))
    u = _batch_inputs(u, m)
    steps = u.shape[0]
    if steps < washout + 1000:
        raise ValueError("input too short: need at least washout + 1000 steps")

    ref = np.broadcast_to(np.asarray(y0, dtype=float), (m,)).astype(float).copy()
    twin = ref + d0 * direction
    logs = np.empty((steps, m))
    with np.errstate(divide="ignore"):
        for t in range(steps):
            drive = win * u[t]
            lin = np.concatenate([w * ref + drive, w * twin + drive])
            vals = transfer.eval(lin)
            ref = vals[:m]
            delta = vals[m:] - ref
            dist = np.abs(delta)
            logs[t] = np.log(dist / d0)
            good = dist > 0.0
            twin = np.where(good, ref + delta * (d0 / np.where(good, dist, 1.0)), ref + d0 * direction)
    lam, stderr, _ = _finalize(logs, washout)
    return lam, stderr


def derivative_product_scalar_batch(
    w,
    w_in,
    u,
    transfer,
    *,
    washout: int = 1000,
    y0=0.0,
):
    """Vectorized tangent-average estimation for one-neuron batches."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    m = w.size
    win = np.broadcast_to(np.asarray(w_in, dtype=float), (m,))
    u = _batch_inputs(u, m)
    steps = u.shape[0]
    if steps < washout + 1000:
        raise ValueError("input too short: need at least washout + 1000 steps")

    state = np.broadcast_to(np.asarray(y0, dtype=float), (m,)).astype(float).copy()
    gain = np.abs(w)
    logs = np.empty((steps, m))
    with np.errstate(divide="ignore"):
        for t in range(steps):
            lin = w * state + win * u[t]
            logs[t] = np.log(gain * transfer.slope(lin))
            state = transfer.eval(lin)
    lam, stderr, _ = _finalize(logs, washout)
    return lam, stderr


# -- critical point of the tanh baseline --------------------------------------


def solve_critical_b(amplitude: float) -> CriticalPoint:
    """Critical recurrent gain of the tanh baseline for a given amplitude.

    Solves the period-2 orbit system ``s = tanh(b*s - amplitude)`` and
    ``b*(1 - s**2) = 1`` (unit per-step tangent magnitude) by bisection
    on ``s`` with ``b = 1/(1 - s**2)`` eliminated.  Residuals of both
    equations are below 1e-12.
    """
    if not (amplitude > 0.0):
        raise ValueError("amplitude must be positive")

    def residual(s: float) -> float:
        b = 1.0 / (1.0 - s * s)
        return math.tanh(b * s - amplitude) - s

    lo, hi = 1e-9, 1.0 - 1e-12
    if not (residual(lo) < 0.0 < residual(hi)):
        raise ValueError(f"no critical orbit bracket for amplitude {amplitude:g}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    b_star = 1.0 / (1.0 - s_star * s_star)
    res_orbit = abs(math.tanh(b_star * s_star - amplitude) - s_star)
    res_tangent = abs(b_star * (1.0 - s_star * s_star) - 1.0)
    if max(res_orbit, res_tangent) >= 1e-12:
        raise RuntimeError("critical-point residuals did not reach 1e-12")
    return CriticalPoint(b_star=b_star, s_star=s_star, residuals=(res_orbit, res_tangent))


def expected_orbit_rate(critical: CriticalPoint, amplitude: float, gamma: float) -> float:
    """Tangent growth rate of the tanh baseline on its expected orbit.

    The state is held on the critical period-2 orbit (the one the gain
    was tuned for) while the input runs at ``gamma`` times the expected
    amplitude; both phases of the orbit see the same linear-response
    magnitude ``|b*s - gamma*amplitude|``, so the per-step rate is
    ``log(b * sech^2(b*s - gamma*amplitude))``.  Zero exactly at
    ``gamma = 1``, positive for louder-than-expected input.
    """
    x = critical.b_star * critical.s_star - gamma * amplitude
    return math.log(critical.b_star * (1.0 - math.tanh(x) ** 2))


# -- decay-law fitting ---------------------------------------------------------


def _window_points(series: DistanceSeries, window, minimum: int = 30):
    t_lo, t_hi = window
    mask = (
        (series.t >= t_lo)
        & (series.t <= t_hi)
        & (series.t >= 1)
        & (series.d > _FLOOR)
    )
    if int(mask.sum()) < minimum:
        raise ValueError(
            f"insufficient valid points in window [{t_lo}, {t_hi}]: "
            f"{int(mask.sum())} < {minimum}"
        )
    return series.t[mask].astype(float), series.d[mask]


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    resid = y - (ym + slope * (x - xm))
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return slope, max(0.0, min(1.0, r2))


def fit_power_law(series: DistanceSeries, window) -> tuple[float, float]:
    """Least-squares slope of log d against log t; returns (c_a, r2)."""
    t, d = _window_points(series, window)
    slope, r2 = _ols(np.log(t), np.log(d))
    return -slope, r2


def fit_exponential(series: DistanceSeries, window) -> tuple[float, float]:
    """Least-squares slope of log d against t; returns (c_b, r2)."""
    t, d = _window_points(series, window)
    slope, r2 = _ols(t, np.log(d))
    return math.exp(slope), r2


def classify_decay(series: DistanceSeries) -> DecayFit:
    """Fit both laws on an automatic window and pick the straighter one.

    The window drops the first 10 steps (transient) and everything at or
    below the floating-point floor.  The law with the higher coefficient
    of determination wins when the margin exceeds 0.02; otherwise the
    result is inconclusive.  Never raises.
    """
    if series.t.size == 0:
        raise ValueError("empty distance series")
    valid = (series.t > 10) & (series.d > _FLOOR)
    if not valid.any():
        return DecayFit(
            law="inconclusive",
            c_a=None,
            c_b=None,
            r2_loglog=0.0,
            r2_semilog=0.0,
            window=(11, 11),
            truncated_at=series.truncated_at,
        )
    window = (11, int(series.t[valid].max()))
    try:
        c_a, r2_ll = fit_power_law(series, window)
        c_b, r2_sl = fit_exponential(series, window)
    except ValueError:
        return DecayFit(
            law="inconclusive",
            c_a=None,
            c_b=None,
            r2_loglog=0.0,
            r2_semilog=0.0,
            window=window,
            truncated_at=series.truncated_at,
        )
    margin = r2_ll - r2_sl
    if margin > 0.02:
        return DecayFit("power_law", c_a, None, r2_ll, r2_sl, window, series.truncated_at)
    if margin < -0.02:
        return DecayFit("exponential", None, c_b, r2_ll, r2_sl, window, series.truncated_at)
    return DecayFit("inconclusive", None, None, r2_ll, r2_sl, window, series.truncated_at)


def loglog_bend(series: DistanceSeries, points: int = 25) -> float:
    """Mean second difference of log d versus log t.

    Computed on a geometric resampling of the series, so it measures the
    curvature of the log-log plot: negative means the decay bends down,
    i.e. is faster than any power law fitted to its early part.
    """
    valid = (series.t >= 1) & (series.d > _FLOOR)
    t = series.t[valid].astype(float)
    d = series.d[valid]
    if t.size < 3:
        raise ValueError("need at least three valid points for a bend estimate")
    targets = np.unique(
        np.rint(10 ** np.linspace(math.log10(t[0]), math.log10(t[-1]), points))
    )
    idx = np.unique(np.searchsorted(t, targets).clip(0, t.size - 1))
    x = np.log(t[idx])
    y = np.log(d[idx])
    if x.size < 3:
        raise ValueError("resampled series too short for a bend estimate")
    left = (y[1:-1] - y[:-2]) / (x[1:-1] - x[:-2])
    right = (y[2:] - y[1:-1]) / (x[2:] - x[1:-1])
    curvature = 2.0 * (right - left) / (x[2:] - x[:-2])
    return float(curvature.mean())


# -- serialization -------------------------------------------------------------


def lyapunov_csv_header() -> list[str]:
    return ["lambda", "stderr", "method", "steps_used", "washout", "d0"]


def lyapunov_csv_row(est: LyapunovEstimate) -> list:
    return [est.lam, est.stderr, est.method, est.steps_used, est.washout,
            "" if est.d0 is None else est.d0]


def decay_csv_header() -> list[str]:
    return ["law", "c_a", "c_b", "r2_loglog", "r2_semilog",
            "window_lo", "window_hi", "truncated_at"]


def decay_csv_row(fit: DecayFit) -> list:
    return [
        fit.law,
        "" if fit.c_a is None else fit.c_a,
        "" if fit.c_b is None else fit.c_b,
        fit.r2_loglog,
        fit.r2_semilog,
        fit.window[0],
        fit.window[1],
        "" if fit.truncated_at is None else fit.truncated_at,
    ]


def render_decay(fit: DecayFit) -> str:
    lines = [f"decay law: {fit.law}"]
    if fit.c_a is not None:
        lines.append(f"power-law exponent c_a = {fit.c_a:.6g}")
    if fit.c_b is not None:
        lines.append(f"exponential base c_b = {fit.c_b:.6g} per step")
    lines.append(f"r2 log-log  = {fit.r2_loglog:.6f}")
    lines.append(f"r2 semi-log = {fit.r2_semilog:.6f}")
    lines.append(f"fit window  = [{fit.window[0]}, {fit.window[1]}]")
    if fit.truncated_at is not None:
        lines.append(f"distance reached exact zero at step {fit.truncated_at}")
    return "\n".join(lines)


def render_lyapunov(est: LyapunovEstimate) -> str:
    lines = [
        f"lambda = {est.lam:.9g} nats/step (stderr {est.stderr:.3g})",
        f"method = {est.method}",
        f"steps used = {est.steps_used} after washout {est.washout}",
    ]
    if est.d0 is not None:
        lines.append(f"initial separation d0 = {est.d0:g}")
    return "\n".join(lines)
