"""Physical parameters, unit conventions and geometry-derived rates.

All frequencies and rates are angular and expressed in s^-1. Populations and
coherences are per-atom fractions; the atom number only enters through the
collective field source ``g2 * N``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

from scipy import constants

HBAR = constants.hbar
C_LIGHT = constants.c
EPS0 = constants.epsilon_0
K_B = constants.k
AMU = constants.atomic_mass


class ValidityWarning(UserWarning):
    """A physical approximation is being used outside its comfortable range."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class AtomSpecies:
    """Atomic data supplied by the user.

    ``dipole_moment`` is the projected Raman-arm dipole |e2 . d12| in C m.
    ``dipole_ratio`` (|d12|/|d13|) only documents the Raman/Rayleigh branching.
    """

    mass: float
    transition_wavelength: float
    dipole_moment: float = 3.584e-29
    dipole_ratio: float = 1.0
    name: str = ""

    def __post_init__(self):
        _require(self.mass > 0, "mass must be positive")
        _require(self.transition_wavelength > 0, "transition_wavelength must be positive")
        _require(self.dipole_moment >= 0, "dipole_moment must be non-negative")

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.transition_wavelength


RB87 = AtomSpecies(mass=86.909180527 * AMU, transition_wavelength=780.241e-9, name="Rb-87")


@dataclass(frozen=True)
class PumpSchedule:
    """Time intervals during which the pump (and hence g2) is on."""

    intervals: tuple[tuple[float, float], ...] = ((0.0, math.inf),)

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for a, b in ivs:
            _require(a < b, f"interval ({a}, {b}) must have t_start < t_end")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            _require(b0 <= a1, "intervals must be sorted and non-overlapping")

    @classmethod
    def always_on(cls) -> "PumpSchedule":
        return cls()

    @classmethod
    def interrupted(cls, t_off: float, t_on: float) -> "PumpSchedule":
        if t_on <= t_off:
            return cls()
        return cls(((0.0, t_off), (t_on, math.inf)))

    def is_on(self, t: float) -> bool:
        return any(a <= t < b for a, b in self.intervals)

    def segments(self, t_end: float) -> list[tuple[float, float, bool]]:
        """Split ``[0, t_end]`` into maximal pieces of constant pump state."""
        edges = {0.0, float(t_end)}
        for a, b in self.intervals:
            for e in (a, b):
                if 0.0 < e < t_end:
                    edges.add(e)
        pts = sorted(edges)
        return [(a, b, self.is_on(0.5 * (a + b))) for a, b in zip(pts, pts[1:])]


@dataclass(frozen=True)
class PumpConfig:
    rabi_frequency: float
    detuning: float
    direction_angle: float = math.pi / 2
    schedule: PumpSchedule = field(default_factory=PumpSchedule)

    def __post_init__(self):
        _require(0.0 <= self.direction_angle <= math.pi, "direction_angle must lie in [0, pi]")
        if self.detuning != 0 and abs(self.rabi_frequency / self.detuning) > 0.1:
            warnings.warn(
                f"|Omega/Delta| = {abs(self.rabi_frequency / self.detuning):.3g} > 0.1; "
                "far-detuned pump approximation is questionable",
                ValidityWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class SampleGeometry:
    length: float
    diameter: float

    def __post_init__(self):
        _require(self.length > 0, "length must be positive")
        _require(self.diameter > 0, "diameter must be positive")


@dataclass(frozen=True)
class PhysicalParams:
    """Rates of the mean-field model. Defaults are the reference BEC scenario."""

    g2: float = 0.5e6
    kappa: float = 1.76e12
    kappa_R_prime: float = 0.0
    Gamma: float = 0.0
    omega_Gamma: float = 0.0
    omega_k: float = 0.0
    omega_r: float = 0.0
    N: float = 2.0e6

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            _require(math.isfinite(v), f"{f.name} must be finite, got {v!r}")
        for name in ("g2", "kappa", "kappa_R_prime", "Gamma", "N"):
            _require(getattr(self, name) >= 0, f"{name} must be non-negative")

    @property
    def kappa_R(self) -> float:
        return self.kappa_R_prime + self.Gamma

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def bec(cls, **kw) -> "PhysicalParams":
        """BEC configuration: no recoil-induced dephasing."""
        if kw.get("Gamma", 0.0) != 0.0:
            raise ValueError("a BEC configuration has Gamma = 0")
        kw["Gamma"] = 0.0
        return cls(**kw)

    @classmethod
    def thermal(
        cls,
        species: AtomSpecies,
        temperature: float,
        theta: float,
        **kw,
    ) -> "PhysicalParams":
        """Thermal gas: Gamma and omega_Gamma follow from the momentum spread."""
        from .thermal import raman_decay_rate, raman_phase_rate

        kw["Gamma"] = raman_decay_rate(species, temperature, theta)
        kw.setdefault("omega_Gamma", raman_phase_rate(species, theta))
        return cls(**kw)


def derive_coupling(species: AtomSpecies, pump: PumpConfig, mode_volume: float) -> float:
    """Raman coupling per photon amplitude, taken real and non-negative."""
    if pump.detuning == 0:
        raise ValueError("zero pump detuning: the far-detuned coupling is undefined")
    if not mode_volume > 0:
        raise ValueError("mode_volume must be positive")
    field_per_photon = math.sqrt(HBAR * species.k0 * C_LIGHT / (2.0 * EPS0 * mode_volume))
    return field_per_photon * species.dipole_moment * abs(pump.rabi_frequency / pump.detuning) / HBAR


def axial_field_decay(geometry: SampleGeometry) -> float:
    """Photon escape rate c/2L of the end-fire modes."""
    return C_LIGHT / (2.0 * geometry.length)


def fresnel_number(geometry: SampleGeometry, wavelength: float) -> float:
    _require(wavelength > 0, "wavelength must be positive")
    return geometry.diameter**2 / (geometry.length * wavelength)


def offaxial_field_decay(geometry: SampleGeometry, wavelength: float) -> float:
    """Lower bound on the decay rate of off-axis modes."""
    F = fresnel_number(geometry, wavelength)
    return axial_field_decay(geometry) * (1.0 / F + 1.0)


def recoil_momentum(species: AtomSpecies, theta: float) -> float:
    """|k0 - q| in m^-1, elastic convention |q| = k0."""
    _require(0.0 <= theta <= math.pi, "theta must lie in [0, pi]")
    return 2.0 * species.k0 * math.sin(theta / 2.0)


def recoil_frequency(species: AtomSpecies, theta: float) -> float:
    dk = recoil_momentum(species, theta)
    return HBAR * dk**2 / (2.0 * species.mass)


def bad_cavity_ratio(p: PhysicalParams, include_recoil: bool = False) -> float:
    """kappa divided by the largest competing rate (inf when nothing competes)."""
    rates = [math.sqrt(p.N) * p.g2, abs(p.omega_k), abs(p.omega_Gamma), p.kappa_R]
    if include_recoil:
        rates.append(abs(p.omega_r))
    biggest = max(rates)
    return math.inf if biggest == 0 else p.kappa / biggest


def check_bad_cavity(p: PhysicalParams, ratio: float = 100.0, include_recoil: bool = False) -> bool:
    """Warn when kappa does not dominate the other rates by ``ratio``."""
    r = bad_cavity_ratio(p, include_recoil)
    if r < ratio:
        warnings.warn(
            f"kappa exceeds the other rates only by {r:.3g} (< {ratio:g}); "
            "adiabatic field elimination may be inaccurate",
            ValidityWarning,
            stacklevel=3,
        )
        return False
    return True
