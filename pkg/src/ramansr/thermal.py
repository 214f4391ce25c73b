"""Momentum distributions and recoil-induced decay of the Raman coherence.

An atom with momentum component ``p`` along the recoil direction ``k0 - q``
picks up the phase rate ``omega_r + p |k0 - q| / m``. Averaging that phase
over the thermal distribution gives the coherence envelope; for a Lorentzian
distribution it is exactly ``exp(i omega_Gamma t - Gamma t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr

from .core_model import HBAR, K_B, AtomSpecies, PhysicalParams, recoil_frequency, recoil_momentum


class DistributionKind(str, Enum):
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"
    DELTA = "delta"


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, error_estimate: float):
        super().__init__(f"{msg} (achieved error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


def momentum_width(mass: float, temperature: float) -> float:
    """delta_p from delta_p**2 / 2m = k_B T / 2."""
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    return math.sqrt(mass * K_B * temperature)


@dataclass(frozen=True)
class MomentumDistribution:
    """1-D momentum distribution along the recoil axis (width in kg m/s)."""

    kind: DistributionKind
    width: float
    mass: float
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DistributionKind(self.kind))
        if self.width < 0:
            raise ValueError("width must be non-negative")
        if self.kind is DistributionKind.DELTA and self.width != 0:
            raise ValueError("a delta distribution has zero width")
        if self.kind is not DistributionKind.DELTA and self.width == 0:
            raise ValueError(f"{self.kind.value} distribution needs a positive width")

    @classmethod
    def thermal(cls, species: AtomSpecies, temperature: float, kind="lorentzian") -> "MomentumDistribution":
        kind = DistributionKind(kind)
        if kind is DistributionKind.DELTA or temperature == 0:
            return cls(DistributionKind.DELTA, 0.0, species.mass, 0.0)
        return cls(kind, momentum_width(species.mass, temperature), species.mass, temperature)

    @classmethod
    def bec(cls, species: AtomSpecies) -> "MomentumDistribution":
        return cls(DistributionKind.DELTA, 0.0, species.mass, 0.0)

    def density(self, p):
        """Probability density in p (delta kind has no density)."""
        p = np.asarray(p, dtype=float)
        w = self.width
        if self.kind is DistributionKind.LORENTZIAN:
            return w / (math.pi * (p**2 + w**2))
        if self.kind is DistributionKind.GAUSSIAN:
            return np.exp(-0.5 * (p / w) ** 2) / (math.sqrt(2 * math.pi) * w)
        raise ValueError("delta distribution has no density")

    def cdf(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind is DistributionKind.LORENTZIAN:
            return 0.5 + np.arctan(p / self.width) / math.pi
        if self.kind is DistributionKind.GAUSSIAN:
            return ndtr(p / self.width)
        return np.where(p >= 0, 1.0, 0.0)


@dataclass(frozen=True)
class DephasingResult:
    decay_rate: float
    phase_rate: float
    kind: DistributionKind


def raman_decay_rate(species: AtomSpecies, temperature: float, theta: float) -> float:
    """Gamma = 2 k0 sqrt(k_B T / m) sin(theta / 2)."""
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    return 2.0 * species.k0 * math.sqrt(K_B * temperature / species.mass) * math.sin(theta / 2.0)


def raman_phase_rate(species: AtomSpecies, theta: float) -> float:
    """omega_Gamma = 2 hbar k0^2 sin^2(theta / 2) / m."""
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    return 2.0 * HBAR * species.k0**2 * math.sin(theta / 2.0) ** 2 / species.mass


def total_coherence_decay(params: PhysicalParams) -> float:
    return params.kappa_R_prime + params.Gamma


def _species_for(dist: MomentumDistribution, k0: float) -> AtomSpecies:
    return AtomSpecies(mass=dist.mass, transition_wavelength=2.0 * math.pi / k0)


def dephasing_envelope(
    dist: MomentumDistribution,
    theta: float,
    k0: float,
    t,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    span: float | None = None,
):
    """rho(t) / rho(0) for a uniformly generated coherence left to dephase.

    The distribution average is evaluated by adaptive Fourier quadrature over
    the full momentum axis (symmetric densities reduce to a cosine transform),
    so this is an independent check of the closed-form decay rate.

    ``span`` restricts the distribution to ``|p| <= span * width`` and
    renormalises it, which is what a truncated momentum grid represents.
    """
    species = _species_for(dist, k0)
    omega_r = recoil_frequency(species, theta)
    doppler = recoil_momentum(species, theta) / dist.mass  # phase rate per unit momentum
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    out = np.empty(t_arr.shape, dtype=complex)

    for i, ti in enumerate(t_arr.flat):
        carrier = np.exp(1j * omega_r * ti)
        if dist.kind is DistributionKind.DELTA or doppler == 0.0 or ti == 0.0:
            out.flat[i] = carrier
            continue
        # dimensionless momentum x = p / width; the density is even in x
        freq = doppler * dist.width * ti
        if dist.kind is DistributionKind.LORENTZIAN:
            f = lambda x: 1.0 / (math.pi * (1.0 + x * x))
        else:
            f = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if span is None:
            val, err = integrate.quad(f, 0.0, np.inf, weight="cos", wvar=freq, epsabs=abs_tol, limlst=200)
            mass = 0.5
        else:
            val, err = integrate.quad(f, 0.0, span, weight="cos", wvar=freq, epsabs=abs_tol, epsrel=rel_tol, limit=500)
            mass = integrate.quad(f, 0.0, span, epsabs=abs_tol, epsrel=rel_tol)[0]
        if err > 1e3 * abs_tol + rel_tol * abs(val) and err > 1e-8:
            raise QuadratureError(f"dephasing quadrature did not converge at t={ti:g}", err)
        out.flat[i] = carrier * val / mass
    if np.ndim(t) == 0:
        return complex(out[0])
    return out.reshape(np.shape(t))


def effective_decay_rate(dist: MomentumDistribution, theta: float, k0: float) -> float:
    """Inverse of the time at which |rho(t)/rho(0)| first reaches 1/e."""
    if dist.kind is DistributionKind.DELTA:
        return 0.0
    species = _species_for(dist, k0)
    scale = recoil_momentum(species, theta) * dist.width / dist.mass
    if scale == 0.0:
        return 0.0
    target = math.exp(-1.0)
    g = lambda t: abs(dephasing_envelope(dist, theta, k0, t)) - target
    hi = 1.0 / scale
    while g(hi) > 0:
        hi *= 2.0
    t_e = optimize.brentq(g, 0.0, hi, xtol=1e-14 / scale, rtol=1e-13)
    return 1.0 / t_e


def dephasing_result(species: AtomSpecies, temperature: float, theta: float, kind="lorentzian") -> DephasingResult:
    dist = MomentumDistribution.thermal(species, temperature, kind)
    if dist.kind is DistributionKind.LORENTZIAN:
        rate = raman_decay_rate(species, temperature, theta)
    else:
        rate = effective_decay_rate(dist, theta, species.k0)
    return DephasingResult(rate, raman_phase_rate(species, theta), dist.kind)
