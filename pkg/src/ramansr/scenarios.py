"""Scenario drivers: atom-number and detuning sweeps, coherence-decay sweeps,
pump interruption, competition between the two end-fire modes and stability
maps.

Every driver takes a resolved :class:`~ramansr.config.ScenarioConfig` and
returns a :class:`RunSummary` plus the time series it produced.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .config import ScenarioConfig
from .core_model import AtomSpecies, PhysicalParams, PumpSchedule, ValidityWarning
from .dynamics import EliminatedModel, KineticModel, ModeRates, MultimodeModel, ReducedModel
from .integrator import IntegrationError, IntegratorConfig, Method, TimeSeries, integrate
from .stability import Regime, characteristic_roots, classify_regime, instability_factor_closed, threshold_coherence_decay
from .thermal import (
    DistributionKind,
    MomentumDistribution,
    dephasing_envelope,
    effective_decay_rate,
    raman_decay_rate,
    raman_phase_rate,
)

FIRED_FRACTION = 1e-3


@dataclass
class RunSummary:
    scenario: str
    records: list[dict]
    provenance: dict
    checks: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any("error" in r for r in self.records)

    def payload(self) -> dict:
        return {"scenario": self.scenario, "records": self.records, "checks": self.checks, "provenance": self.provenance}

    def digest(self) -> str:
        blob = json.dumps(_sanitize(self.payload()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _sanitize(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _provenance(cfg: ScenarioConfig) -> dict:
    return {"tool": "ramansr", "version": __version__, "config_hash": cfg.digest(), "resolved": cfg.as_json()}


def _regime(p: PhysicalParams) -> Regime:
    if p.N <= 0:
        return Regime.STABLE
    return classify_regime(p, p.N * np.array([0.1, 10**-0.5, 1.0]))


def _stability_fields(p: PhysicalParams) -> dict:
    r = characteristic_roots(p)
    return {"S_plus": r.instability_factor, "S_plus_imag": r.S_plus.imag, "regime": _regime(p).value}


@lru_cache(maxsize=256)
def bec_baseline_peak(N: float, g2: float, kappa: float, t_end: float) -> float:
    """Peak |A|^2 of an undamped single-mode BEC run at the same N, g2, kappa."""
    p = PhysicalParams(g2=g2, kappa=kappa, N=N)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        m = EliminatedModel(p)
    G = N * g2**2 / kappa
    horizon = max(t_end, 4.0 * math.acosh(max(1.0, math.sqrt(N / 8.0))) / G) if G > 0 else t_end
    ts = integrate(m, m.initial_state(), IntegratorConfig(t_end=horizon, rel_tol=1e-9, abs_tol=1e-13))
    return ts.metrics.peak_intensity


def _seed(cfg: ScenarioConfig, p: PhysicalParams) -> float:
    return cfg["rho0"] if cfg["rho0"] is not None else math.sqrt(2.0 / p.N)


def build_model(cfg: ScenarioConfig, p: PhysicalParams, tier: str | None = None):
    tier = tier or cfg["model"]
    if tier == "eliminated":
        return EliminatedModel(p)
    if tier == "full":
        return ReducedModel(p)
    if tier == "multimode":
        modes = axial_modes(cfg.species, p, cfg["temperature"], cfg["pump_mode"])
        return MultimodeModel(p, modes, eliminated=True)
    if tier == "kinetic":
        dist = MomentumDistribution.thermal(cfg.species, cfg["temperature"], cfg["distribution"])
        return KineticModel(p, dist, cfg.species, cfg["theta"], cfg["kinetic_cells"], eliminated=cfg["kinetic_eliminated"])
    raise ValueError(f"unknown model tier {tier!r}")


def _run_point(args):
    cfg, p, tier, schedule, icfg = args
    model = build_model(cfg, p, tier)
    y0 = model.initial_state(_seed(cfg, p))
    try:
        ts = integrate(model, y0, icfg, schedule)
    except IntegrationError as exc:
        return None, str(exc)
    return ts, None


def _run_points(cfg: ScenarioConfig, jobs: list) -> list:
    if cfg["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(j) for j in jobs]


def _record(base: dict, p: PhysicalParams, ts: TimeSeries | None, err: str | None, baseline: float | None = None) -> dict:
    rec = dict(base)
    rec.update({"g2": p.g2, "kappa": p.kappa, "kappa_R": p.kappa_R, "N": p.N})
    rec.update(_stability_fields(p))
    if err is not None:
        rec["error"] = err
        return rec
    rec.update(ts.metrics.as_dict())
    if baseline is not None:
        rec["baseline_peak"] = baseline
        rec["fired"] = bool(ts.metrics.peak_intensity > FIRED_FRACTION * baseline)
    return rec


def simulate(cfg: ScenarioConfig, tier: str | None = None) -> tuple[RunSummary, list[TimeSeries]]:
    p = cfg.params
    ts, err = _run_point((cfg, p, tier or cfg["model"], cfg.schedule, cfg.integrator))
    rec = _record({"model": tier or cfg["model"], "rho0": _seed(cfg, p)}, p, ts, err)
    return RunSummary("simulate", [rec], _provenance(cfg)), [ts] if ts is not None else []


def sweep(cfg: ScenarioConfig, tier: str | None = None) -> tuple[RunSummary, list[TimeSeries]]:
    name, values = cfg.sweep
    if not name:
        raise ValueError("sweep needs sweep_param and sweep_values")
    base = cfg.params
    points = [base.replace(**{name: v}) for v in values]
    jobs = [(cfg, p, tier or cfg["model"], cfg.schedule, cfg.integrator) for p in points]
    results = _run_points(cfg, jobs)
    records = [_record({name: v, "rho0": _seed(cfg, p)}, p, ts, err) for v, p, (ts, err) in zip(values, points, results)]
    return RunSummary("sweep", records, _provenance(cfg)), [ts for ts, _ in results if ts is not None]


def scenario_fig2(cfg: ScenarioConfig, N_list=None, detuning_factors=None) -> tuple[RunSummary, list[TimeSeries]]:
    """Eliminated BEC runs over atom number and pump detuning.

    At fixed Rabi frequency the coupling scales as 1/detuning, so a detuning
    factor f maps to ``g2 / f``.
    """
    N_list = list(cfg["N_list"] if N_list is None else N_list)
    factors = list(cfg["detuning_factors"] if detuning_factors is None else detuning_factors)
    base = cfg.params.replace(Gamma=0.0)
    combos = [(N, f) for f in factors for N in N_list]
    points = [base.replace(N=N, g2=base.g2 / f) for N, f in combos]
    jobs = [(cfg, p, "eliminated", PumpSchedule.always_on(), cfg.integrator) for p in points]
    results = _run_points(cfg, jobs)
    records = [
        _record({"N_point": N, "detuning_factor": f, "rho0": _seed(cfg, p)}, p, ts, err)
        for (N, f), p, (ts, err) in zip(combos, points, results)
    ]
    checks = {}
    for f in factors:
        recs = sorted((r for r in records if r["detuning_factor"] == f and "error" not in r), key=lambda r: r["N"])
        if len(recs) >= 2:
            Ns = np.array([r["N"] for r in recs])
            peaks = np.array([r["peak_intensity"] for r in recs])
            checks[f"peak_exponent_f{f:g}"] = float(np.polyfit(np.log(Ns), np.log(peaks), 1)[0])
            checks[f"delay_decreasing_f{f:g}"] = bool(np.all(np.diff([r["delay_time"] for r in recs]) < 0))
    return RunSummary("fig2", records, _provenance(cfg), checks), [ts for ts, _ in results if ts is not None]


def _monotone(xs, increasing: bool) -> bool:
    d = np.diff(xs)
    return bool(np.all(d >= 0) if increasing else np.all(d <= 0))


def scenario_fig3(cfg: ScenarioConfig, kappaR_list=None) -> tuple[RunSummary, list[TimeSeries]]:
    """Eliminated BEC runs with increasing coherence decay."""
    base = cfg.params.replace(Gamma=0.0)
    kstar = threshold_coherence_decay(base)
    if kappaR_list is None:
        kappaR_list = cfg["kappaR_list"] or [x * kstar for x in (0.0, 0.25, 0.5, 0.75, 2.0)]
    kappaR_list = sorted(kappaR_list)
    points = [base.replace(kappa_R_prime=k) for k in kappaR_list]
    jobs = [(cfg, p, "eliminated", PumpSchedule.always_on(), cfg.integrator) for p in points]
    results = _run_points(cfg, jobs)
    baseline = bec_baseline_peak(base.N, base.g2, base.kappa, cfg["t_end"])
    records = [
        _record({"kappa_R_point": k, "kappa_R_star": kstar, "rho0": _seed(cfg, p)}, p, ts, err, baseline)
        for k, p, (ts, err) in zip(kappaR_list, points, results)
    ]
    ok = [r for r in records if "error" not in r]
    fired = [r for r in ok if r["fired"]]
    checks = {
        "delay_nondecreasing": _monotone([r["delay_time"] for r in fired], True),
        "peak_nonincreasing": _monotone([r["peak_intensity"] for r in ok], False),
        "residual_population": all(r["final_rho33"] > 0 for r in ok if r["kappa_R"] > 0),
    }
    return RunSummary("fig3", records, _provenance(cfg), checks), [ts for ts, _ in results if ts is not None]


def reduced_kappa_surrogate(p: PhysicalParams, kappa_reduced: float) -> PhysicalParams:
    """Lower kappa while keeping the bad-cavity gain N g2^2 / kappa fixed."""
    return p.replace(kappa=kappa_reduced, g2=p.g2 * math.sqrt(kappa_reduced / p.kappa))


def scenario_pump_interruption(
    cfg: ScenarioConfig, t_off: float | None = None, t_on: float | None = None, kappa_R: float | None = None
) -> tuple[RunSummary, list[TimeSeries]]:
    """Full model with the pump switched off on ``[t_off, t_on)``.

    Compares against the uninterrupted run shifted by the gap.
    """
    t_off = cfg["t_off"] if t_off is None else t_off
    t_on = t_off + cfg["gap"] if t_on is None else t_on
    gap = t_on - t_off
    p = reduced_kappa_surrogate(cfg.params, cfg["kappa_reduced"])
    if kappa_R is not None:
        p = p.replace(kappa_R_prime=kappa_R, Gamma=0.0)
    if not t_off < cfg["t_end"] or not t_on < cfg["t_end"]:
        raise ValueError("t_off < t_on < t_end required")
    if gap > 0 and (gap < 10.0 / p.kappa or (p.kappa_R > 0 and gap > 0.1 / p.kappa_R)):
        warnings.warn("interruption gap is not well inside (1/kappa, 1/kappa_R)", ValidityWarning, stacklevel=2)

    icfg = cfg.integrator
    icfg = IntegratorConfig(
        t_end=icfg.t_end, rel_tol=icfg.rel_tol, abs_tol=icfg.abs_tol, max_step=icfg.max_step,
        method=Method.STIFF, sample_count=icfg.sample_count, max_rhs_evals=icfg.max_rhs_evals,
    )
    sched = PumpSchedule.interrupted(t_off, t_on)
    jobs = [(cfg, p, "full", PumpSchedule.always_on(), icfg), (cfg, p, "full", sched, icfg)]
    (ref, err0), (cut, err1) = _run_points(cfg, jobs)
    records = [
        _record({"run": "uninterrupted", "rho0": _seed(cfg, p)}, p, ref, err0),
        _record({"run": "interrupted", "t_off": t_off, "t_on": t_on, "rho0": _seed(cfg, p)}, p, cut, err1),
    ]
    checks = {}
    if ref is not None and cut is not None:
        t = cut.times[cut.times >= t_on]
        shifted = ref.interpolate(t - gap)
        model = ReducedModel(p)
        ref_r33 = np.array([model.rho33(s) for s in shifted])
        cut_r33 = cut.rho33[cut.times >= t_on]
        checks = {
            "gap": gap,
            "max_rho33_deviation_after_resume": float(np.max(np.abs(cut_r33 - ref_r33))) if t.size else 0.0,
            "delay_shift": cut.metrics.delay_time - ref.metrics.delay_time,
            "peak_ratio": cut.metrics.peak_intensity / ref.metrics.peak_intensity,
        }
    series = [s for s in (ref, cut) if s is not None]
    return RunSummary("interrupt", records, _provenance(cfg), checks), series


def axial_modes(species: AtomSpecies, p: PhysicalParams, temperature: float, pump_mode: str) -> list[ModeRates]:
    """The two end-fire modes; angles are measured from the pump direction."""
    if pump_mode == "longitudinal":
        angles = (0.0, math.pi)
    elif pump_mode == "perpendicular":
        angles = (math.pi / 2, math.pi / 2)
    else:
        raise ValueError(f"unknown pump_mode {pump_mode!r}")
    return [
        ModeRates(
            kappa=p.kappa,
            kappa_R=p.kappa_R_prime + raman_decay_rate(species, temperature, th),
            omega_Gamma=raman_phase_rate(species, th),
            omega_k=p.omega_k,
        )
        for th in angles
    ]


def scenario_mode_asymmetry(cfg: ScenarioConfig, temperature: float | None = None, pump_mode: str | None = None):
    """Two axial modes competing for the same source population."""
    T = cfg["temperature"] if temperature is None else temperature
    mode = pump_mode or cfg["pump_mode"]
    p = cfg.params.replace(Gamma=0.0)
    modes = axial_modes(cfg.species, p, T, mode)
    model = MultimodeModel(p, modes, eliminated=True)
    icfg = cfg.integrator
    try:
        ts, err = integrate(model, model.initial_state(_seed(cfg, p)), icfg), None
    except IntegrationError as exc:
        ts, err = None, str(exc)
    baseline = bec_baseline_peak(p.N, p.g2, p.kappa, icfg.t_end)
    labels = ("parallel", "antiparallel") if mode == "longitudinal" else ("forward", "backward")
    records = []
    for j, (lab, m) in enumerate(zip(labels, modes)):
        rec = {"mode": lab, "temperature": T, "pump_mode": mode, "Gamma": m.kappa_R - p.kappa_R_prime, "kappa_R": m.kappa_R}
        rec["S_plus"] = instability_factor_closed(p.replace(kappa_R_prime=m.kappa_R))
        if err is not None:
            rec["error"] = err
        else:
            inten = np.abs(ts.fields[:, j]) ** 2
            rec["peak_intensity"] = float(inten.max())
            rec["delay_time"] = float(ts.times[int(np.argmax(inten))])
            rec["baseline_peak"] = baseline
            rec["fired"] = bool(inten.max() > FIRED_FRACTION * baseline)
        records.append(rec)
    checks = {}
    if err is None:
        checks["final_rho33"] = ts.metrics.final_rho33
        amp = np.abs(ts.fields)
        scale = amp.max()
        checks["mode_asymmetry"] = float(np.max(np.abs(amp[:, 0] - amp[:, 1])) / scale) if scale > 0 else 0.0
        checks["symmetric"] = checks["mode_asymmetry"] < 1e-6
    return RunSummary("modes", records, _provenance(cfg), checks), [ts] if ts is not None else []


def _map_params(cfg: ScenarioConfig, base: PhysicalParams, T: float, theta: float, assign: dict) -> PhysicalParams:
    T = assign.get("T", T)
    theta = assign.get("theta", theta)
    kw = {k: v for k, v in assign.items() if k in ("N", "g2", "kappa")}
    if "kappa_R" in assign:
        kw["kappa_R_prime"] = assign["kappa_R"]
        kw["Gamma"] = 0.0
    if "T" in assign or "theta" in assign:
        kw["Gamma"] = raman_decay_rate(cfg.species, T, theta)
        kw["omega_Gamma"] = raman_phase_rate(cfg.species, theta)
    return base.replace(**kw)


def scenario_stability_map(cfg: ScenarioConfig, axis1=None, values1=None, axis2=None, values2=None):
    """Growth exponent and regime label on a 2-D parameter grid.

    ``contour`` lists, for each axis1 value, the axis2 value where the
    instability factor crosses zero (bracketed by the grid, refined by brentq).
    """
    axis1 = axis1 or cfg["axis1"]
    axis2 = axis2 or cfg["axis2"]
    values1 = list(cfg["axis1_values"] if values1 is None else values1)
    values2 = list(cfg["axis2_values"] if values2 is None else values2)
    if axis1 == axis2:
        raise ValueError("stability map axes must differ")
    base = cfg.params
    T, theta = cfg["temperature"], cfg["theta"]
    rows, contour = [], []
    for v1 in values1:
        S_col = []
        for v2 in values2:
            p = _map_params(cfg, base, T, theta, {axis1: v1, axis2: v2})
            fields_ = _stability_fields(p)
            S_col.append(fields_["S_plus"])
            rows.append({axis1: v1, axis2: v2, **fields_, "S_plus_closed": instability_factor_closed(p),
                         "kappa_R": p.kappa_R, "kappa_R_star": threshold_coherence_decay(p)})
        for (a, Sa), (b, Sb) in zip(zip(values2, S_col), zip(values2[1:], S_col[1:])):
            if Sa == 0.0:
                contour.append({axis1: v1, axis2: a})
            elif Sa * Sb < 0:
                f = lambda v: characteristic_roots(_map_params(cfg, base, T, theta, {axis1: v1, axis2: v})).instability_factor
                contour.append({axis1: v1, axis2: brentq(f, a, b, xtol=1e-12 * max(abs(a), abs(b)), rtol=1e-13)})
    summary = RunSummary("stability", rows, _provenance(cfg), {"axis1": axis1, "axis2": axis2, "contour": contour})
    return summary


def thermal_decay(cfg: ScenarioConfig, n_times: int | None = None) -> tuple[RunSummary, dict]:
    """Numerical coherence envelope for the configured distribution."""
    species = cfg.species
    T, theta = cfg["temperature"], cfg["theta"]
    dist = MomentumDistribution.thermal(species, T, cfg["distribution"])
    Gamma = raman_decay_rate(species, T, theta)
    wG = raman_phase_rate(species, theta)
    t_end = 5.0 / Gamma if Gamma > 0 else cfg["t_end"]
    t = np.linspace(0.0, t_end, n_times or cfg["sample_count"])
    env = dephasing_envelope(dist, theta, species.k0, t)
    analytic = np.exp(1j * wG * t - Gamma * t)
    eff = effective_decay_rate(dist, theta, species.k0)
    rec = {
        "distribution": dist.kind.value, "temperature": T, "theta": theta, "Gamma": Gamma,
        "omega_Gamma": wG, "effective_rate": eff, "effective_rate_over_Gamma": eff / Gamma if Gamma > 0 else math.nan,
        "max_deviation_from_lorentzian_law": float(np.max(np.abs(env - analytic))),
    }
    if dist.kind is DistributionKind.DELTA:
        rec["effective_rate_over_Gamma"] = math.nan
    return RunSummary("thermal-decay", [rec], _provenance(cfg)), {"t": t, "envelope": env, "analytic": analytic}
