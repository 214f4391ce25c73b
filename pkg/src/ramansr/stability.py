"""Linear stability of the inverted, field-free stationary state.

Linearising around ``A = 0, rho = 0, rho33 = 1`` gives a 2x2 system for
``(dA, drho)`` whose characteristic polynomial is quadratic in the growth
exponent ``S``. The root with the larger real part decides stability.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core_model import PhysicalParams, ValidityWarning, bad_cavity_ratio


class Regime(str, Enum):
    STABLE = "Stable"
    SUPERRADIANT = "Superradiant"
    COLLECTIVE_GAIN = "CollectiveGain"


@dataclass(frozen=True)
class StabilityResult:
    S_plus: complex
    S_minus: complex

    @property
    def instability_factor(self) -> float:
        return self.S_plus.real

    @property
    def unstable(self) -> bool:
        return self.S_plus.real > 0


def characteristic_coefficients(p: PhysicalParams) -> tuple[complex, complex]:
    """(b, c) of S^2 + b S + c = 0."""
    b = 1j * (p.omega_k - p.omega_Gamma) + p.kappa + p.kappa_R
    c = (-1j * p.omega_Gamma + p.kappa_R) * p.kappa - p.N * p.g2**2 + p.omega_k * p.omega_Gamma + 1j * p.omega_k * p.kappa_R
    return complex(b), complex(c)


def characteristic_residual(p: PhysicalParams, S: complex) -> float:
    b, c = characteristic_coefficients(p)
    return abs(S * S + b * S + c)


def characteristic_roots(p: PhysicalParams) -> StabilityResult:
    b, c = characteristic_coefficients(p)
    sq = cmath.sqrt(b * b - 4.0 * c)
    # add in the direction of b to avoid cancellation, then use the root product
    if (b.conjugate() * sq).real < 0:
        sq = -sq
    q = -0.5 * (b + sq)
    if q == 0:
        r1 = r2 = 0j
    else:
        r1, r2 = q, c / q
    if (r2.real, r2.imag) > (r1.real, r1.imag):
        r1, r2 = r2, r1
    return StabilityResult(r1, r2)


def instability_factor_closed(p: PhysicalParams) -> float:
    """Largest growth exponent for omega_Gamma = omega_k = 0.

    Evaluated in the rationalised form ``2X / (s + sqrt(D))`` with
    ``X = N g2^2 - kappa kappa_R``; algebraically identical to the textbook
    ``(-s + sqrt(D)) / 2`` but free of cancellation when kappa is huge.
    """
    s = p.kappa + p.kappa_R
    X = p.N * p.g2**2 - p.kappa * p.kappa_R
    D = s * s + 4.0 * X
    if D < 0:
        return -0.5 * s
    den = s + math.sqrt(D)
    if den == 0:
        return 0.0
    return 2.0 * X / den


def instability_factor_badcavity(p: PhysicalParams, warn: bool = True) -> float:
    if warn and bad_cavity_ratio(p, include_recoil=True) < 100:
        warnings.warn("bad-cavity growth rate used with kappa < 100x the other rates", ValidityWarning, stacklevel=2)
    return (p.N * p.g2**2 - p.kappa_R * p.kappa) / p.kappa


def threshold_coherence_decay(p: PhysicalParams) -> float:
    """Coherence decay rate at which the instability factor crosses zero."""
    if p.kappa <= 0:
        raise ValueError("kappa must be positive")
    return p.N * p.g2**2 / p.kappa


def threshold_pump_coupling(p: PhysicalParams, kappa_R: float | None = None) -> float:
    """Smallest g2 that destabilises the system at coherence decay ``kappa_R``."""
    if p.N < 1:
        raise ValueError("N must be >= 1")
    kR = p.kappa_R if kappa_R is None else kappa_R
    return math.sqrt(p.kappa * kR / p.N)


def linearity_deviation(N_probe, S) -> float:
    """Max residual of an affine least-squares fit, relative to max |S|."""
    N_probe = np.asarray(N_probe, dtype=float)
    S = np.asarray(S, dtype=float)
    coef = np.polyfit(N_probe, S, 1)
    resid = S - np.polyval(coef, N_probe)
    scale = np.max(np.abs(S))
    return float(np.max(np.abs(resid)) / scale) if scale > 0 else 0.0


def classify_regime(p: PhysicalParams, N_probe, tol: float = 0.05) -> Regime:
    N_probe = np.sort(np.asarray(N_probe, dtype=float))
    if N_probe.size < 3 or N_probe[0] <= 0 or N_probe[-1] / N_probe[0] < 10.0 * (1 - 1e-12):
        raise ValueError("N_probe needs >= 3 positive values spanning at least one decade")
    S = np.array([instability_factor_closed(p.replace(N=n)) for n in N_probe])
    if S[-1] <= 0:
        return Regime.STABLE
    if linearity_deviation(N_probe, S) <= tol:
        return Regime.SUPERRADIANT
    return Regime.COLLECTIVE_GAIN
