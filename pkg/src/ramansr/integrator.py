"""Adaptive time integration with pump schedules and pulse metrics.

Integration is delegated to :func:`scipy.integrate.solve_ivp` (complex
states are split into real and imaginary halves): an explicit
embedded Runge-Kutta pair (DOP853) for non-stiff problems and Radau IIA for
the stiff full model. Each pump on/off edge restarts the solver. The emitted
photon number is integrated alongside the state as an extra component.

:func:`reference_integrate` is a plain fixed-step RK4 kept as an independent
check on the adaptive path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .core_model import PumpSchedule
from .dynamics import FunctionModel, Model, StateError


class Method(str, Enum):
    ADAPTIVE = "adaptive"
    STIFF = "stiff"


_SCIPY_METHOD = {Method.ADAPTIVE: "DOP853", Method.STIFF: "Radau"}


class IntegrationError(RuntimeError):
    def __init__(self, msg: str, last_t: float | None = None):
        super().__init__(msg)
        self.last_t = last_t


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_step: float = math.inf
    method: Method = Method.ADAPTIVE
    sample_count: int = 2001
    max_rhs_evals: int = 5_000_000

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive and finite")
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")
        if self.max_rhs_evals < 1:
            raise ValueError("max_rhs_evals must be positive")
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


@dataclass(frozen=True)
class PulseMetrics:
    delay_time: float
    peak_intensity: float
    final_rho33: float
    emitted_photons: float

    def as_dict(self) -> dict:
        return {
            "delay_time": self.delay_time,
            "peak_intensity": self.peak_intensity,
            "final_rho33": self.final_rho33,
            "emitted_photons": self.emitted_photons,
        }


@dataclass
class TimeSeries:
    times: np.ndarray
    states: np.ndarray
    fields: np.ndarray  # (samples, modes)
    rho: np.ndarray  # (samples, modes)
    rho33: np.ndarray
    emitted: np.ndarray  # cumulative photons
    metrics: PulseMetrics
    n_steps: int = 0
    min_step: float = math.nan
    _segments: list = field(default_factory=list, repr=False)

    @property
    def intensity(self) -> np.ndarray:
        return np.sum(np.abs(self.fields) ** 2, axis=1)

    def interpolate(self, t) -> np.ndarray:
        """Dense-output state (without the photon counter) at time(s) t."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t_arr.size, self.states.shape[1]), dtype=complex)
        for i, ti in enumerate(t_arr):
            out[i] = _dense_eval(self._segments, ti)[:-1]
        return out[0] if np.ndim(t) == 0 else out


def _pack(y: np.ndarray) -> np.ndarray:
    return np.concatenate([y.real, y.imag])


def _unpack(x: np.ndarray) -> np.ndarray:
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def _dense_eval(segments, t):
    for t0, t1, sol, _ in segments:
        if t <= t1:
            return _unpack(sol(min(max(t, t0), t1)))
    t0, t1, sol, _ = segments[-1]
    return _unpack(sol(t1))


def _pump_at(segments, t):
    for t0, t1, _, on in segments:
        if t <= t1:
            return on
    return segments[-1][3]


def _as_model(model) -> Model:
    return model if isinstance(model, Model) else FunctionModel(model)


def integrate(model, state0, cfg: IntegratorConfig, schedule: PumpSchedule | None = None) -> TimeSeries:
    """Integrate ``model`` from ``state0`` over ``[0, cfg.t_end]``.

    ``model`` is a :class:`~ramansr.dynamics.Model` or a callable
    ``f(y, pump_on)``. Raises :class:`IntegrationError` on step-size
    underflow, an exhausted evaluation budget (both usually mean the problem
    is stiff) or a non-finite state.
    """
    model = _as_model(model)
    schedule = schedule or PumpSchedule.always_on()
    y0 = np.asarray(state0, dtype=complex).ravel()
    if not np.all(np.isfinite(y0)):
        raise IntegrationError("initial state is not finite", 0.0)

    budget = {"evals": 0, "last_t": 0.0}

    def make_f(pump_on):
        def f(t, u):
            y = _unpack(u)
            budget["evals"] += 1
            if budget["evals"] > cfg.max_rhs_evals:
                raise IntegrationError(
                    f"evaluation budget of {cfg.max_rhs_evals} exhausted at t={t:.6g}; "
                    "the problem looks stiff, use method='stiff'",
                    budget["last_t"],
                )
            x = y[:-1]
            try:
                dx = model.rhs(x, pump_on)
            except StateError as exc:
                raise IntegrationError(f"non-finite state after t={budget['last_t']:.6g}", budget["last_t"]) from exc
            budget["last_t"] = t
            return _pack(np.append(dx, model.photon_flux(x, pump_on)))

        return f

    segments = []
    y = np.append(y0, 0.0)
    n_steps, min_step = 0, math.inf
    for t0, t1, on in schedule.segments(cfg.t_end):
        sol = solve_ivp(
            make_f(on),
            (t0, t1),
            _pack(y),
            method=_SCIPY_METHOD[cfg.method],
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
            max_step=cfg.max_step,
            dense_output=True,
        )
        if sol.status != 0:
            hint = " (try method='stiff')" if cfg.method is Method.ADAPTIVE else ""
            raise IntegrationError(f"integration failed at t={sol.t[-1]:.6g}: {sol.message}{hint}", float(sol.t[-1]))
        if not np.all(np.isfinite(sol.y[:, -1])):
            raise IntegrationError(f"non-finite state after t={sol.t[-2]:.6g}", float(sol.t[-2]))
        if sol.t[-1] < t1:
            raise IntegrationError(f"integration stopped early at t={sol.t[-1]:.6g}", float(sol.t[-1]))
        steps = np.diff(sol.t)
        n_steps += steps.size
        # the first step of a segment is the solver's probe, not an accuracy-limited step
        settled = steps[1:-1] if steps.size > 2 else steps
        if settled.size:
            min_step = min(min_step, float(settled.min()))
        segments.append((t0, t1, sol.sol, on))
        y = _unpack(sol.y[:, -1])

    times = np.linspace(0.0, cfg.t_end, cfg.sample_count)
    ext = np.array([_dense_eval(segments, t) for t in times])
    states = ext[:, :-1]
    pumps = [_pump_at(segments, t) for t in times]
    fields_ = np.array([model.fields(s, on) for s, on in zip(states, pumps)]).reshape(len(times), -1)
    rho = np.array([model.coherences(s) for s in states]).reshape(len(times), -1)
    r33 = np.array([model.rho33(s) for s in states])
    emitted = ext[:, -1].real
    # the last sample must agree with the final solver state exactly
    states[-1] = y[:-1]
    emitted[-1] = y[-1].real
    r33[-1] = model.rho33(y[:-1])

    metrics = _pulse_metrics(model, segments, times, fields_, r33, emitted)
    return TimeSeries(times, states, fields_, rho, r33, emitted, metrics, n_steps, min_step, segments)


def _pulse_metrics(model, segments, times, fields_, r33, emitted) -> PulseMetrics:
    inten = np.sum(np.abs(fields_) ** 2, axis=1) if fields_.size else np.zeros(times.size)
    i = int(np.argmax(inten))
    t_peak, peak = float(times[i]), float(inten[i])
    if fields_.size and 0 < i < times.size - 1 and peak > 0:

        def neg(t):
            s = _dense_eval(segments, t)[:-1]
            return -float(np.sum(np.abs(model.fields(s, _pump_at(segments, t))) ** 2))

        res = minimize_scalar(neg, bounds=(times[i - 1], times[i + 1]), method="bounded", options={"xatol": 1e-6 * (times[1] - times[0])})
        if -res.fun >= peak:
            t_peak, peak = float(res.x), float(-res.fun)
    return PulseMetrics(t_peak, peak, float(r33[-1]), float(emitted[-1]))


def reference_integrate(model, state0, cfg: IntegratorConfig, step: float, schedule: PumpSchedule | None = None) -> TimeSeries:
    """Fixed-step classical RK4 on the same sample grid as :func:`integrate`.

    ``step`` is an upper bound; each pump segment and each sampling interval
    is split into an integer number of equal steps.
    """
    model = _as_model(model)
    schedule = schedule or PumpSchedule.always_on()
    y = np.append(np.asarray(state0, dtype=complex).ravel(), 0.0)
    times = np.linspace(0.0, cfg.t_end, cfg.sample_count)

    def f(x, on):
        try:
            dx = model.rhs(x[:-1], on)
        except StateError as exc:
            raise IntegrationError("non-finite state in reference integration") from exc
        return np.append(dx, model.photon_flux(x[:-1], on))

    stops = sorted(set(times.tolist()) | {a for a, _, _ in schedule.segments(cfg.t_end)})
    out = {0.0: y.copy()}
    n_steps = 0
    for a, b in zip(stops, stops[1:]):
        on = schedule.is_on(0.5 * (a + b))
        n = max(1, math.ceil((b - a) / step))
        h = (b - a) / n
        for _ in range(n):
            k1 = f(y, on)
            k2 = f(y + 0.5 * h * k1, on)
            k3 = f(y + 0.5 * h * k2, on)
            k4 = f(y + h * k3, on)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        n_steps += n
        out[b] = y.copy()

    ext = np.array([out[t] for t in times.tolist()])
    states = ext[:, :-1]
    pumps = [schedule.is_on(t) if t < cfg.t_end else schedule.is_on(cfg.t_end - 1e-300) for t in times]
    fields_ = np.array([model.fields(s, on) for s, on in zip(states, pumps)]).reshape(len(times), -1)
    rho = np.array([model.coherences(s) for s in states]).reshape(len(times), -1)
    r33 = np.array([model.rho33(s) for s in states])
    emitted = ext[:, -1].real
    inten = np.sum(np.abs(fields_) ** 2, axis=1) if fields_.size else np.zeros(times.size)
    i = int(np.argmax(inten))
    metrics = PulseMetrics(float(times[i]), float(inten[i]), float(r33[-1]), float(emitted[-1]))
    return TimeSeries(times, states, fields_, rho, r33, emitted, metrics, n_steps, step)
