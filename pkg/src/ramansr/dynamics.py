"""Right-hand sides of the mean-field Maxwell-Bloch equations.

Four model tiers share one convention: a state is a flat complex numpy array,
populations are stored with zero imaginary part, and ``pump_on=False`` sets the
Raman coupling to zero while leaving every decay active.

* full reduced model: ``[A, rho, rho33]``
* field-eliminated model: ``[rho, rho33]`` with ``A = -i g2 N rho / kappa``
* multimode: ``[A_1..A_J, rho_1..rho_J, rho33]`` (or without the A block)
* kinetic: ``[A, rho_1..rho_M, N_1..N_M]`` on a momentum grid (or without A)

Each tier is wrapped in a small model class exposing ``rhs``, ``fields``,
``coherences``, ``rho33`` and ``photon_flux`` so the integrator can compute
pulse metrics without knowing the layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import AtomSpecies, PhysicalParams, check_bad_cavity, recoil_frequency, recoil_momentum
from .thermal import DistributionKind, MomentumDistribution


class StateError(ValueError):
    pass


def quantum_seed(N: float) -> float:
    """Initial coherence sqrt(2/N) set by quantum noise."""
    if N < 1:
        raise ValueError("the quantum seed needs N >= 1")
    return math.sqrt(2.0 / N)


def _check_finite(y: np.ndarray) -> None:
    if not np.all(np.isfinite(y)):
        raise StateError("non-finite state")


@dataclass(frozen=True)
class ReducedState:
    A: complex = 0.0
    rho: complex = 0.0
    rho33: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.rho, self.rho33], dtype=complex)

    @classmethod
    def from_array(cls, y) -> "ReducedState":
        return cls(complex(y[0]), complex(y[1]), float(np.real(y[2])))

    @classmethod
    def seeded(cls, N: float, rho0: float | None = None) -> "ReducedState":
        return cls(0.0, quantum_seed(N) if rho0 is None else rho0, 1.0)


def bloch_invariant(rho, rho33) -> float:
    """|rho|^2 + (rho33 - 1/2)^2, conserved without coherence decay."""
    return float(abs(rho) ** 2 + (np.real(rho33) - 0.5) ** 2)


def eliminate_field(rho, p: PhysicalParams):
    """Quasi-steady field amplitude slaved to the coherence."""
    if p.kappa <= 0:
        raise ValueError("field elimination needs kappa > 0")
    return -1j * p.g2 * p.N * rho / p.kappa


def rhs_reduced(y: np.ndarray, p: PhysicalParams, pump_on: bool = True) -> np.ndarray:
    _check_finite(y)
    A, rho, r33 = y[0], y[1], y[2].real
    g = p.g2 if pump_on else 0.0
    dA = -(1j * p.omega_k + p.kappa) * A - 1j * g * p.N * rho
    drho = (1j * p.omega_Gamma - p.kappa_R) * rho - 1j * g * (1.0 - 2.0 * r33) * A
    # i g (rho A* - rho* A) written as a real number
    dr33 = -2.0 * g * (rho * np.conj(A)).imag
    return np.array([dA, drho, dr33], dtype=complex)


def rhs_eliminated(y: np.ndarray, p: PhysicalParams, pump_on: bool = True) -> np.ndarray:
    _check_finite(y)
    rho, r33 = y[0], y[1].real
    gain = p.g2**2 * p.N / p.kappa if pump_on else 0.0
    drho = (1j * p.omega_Gamma + (2.0 * r33 - 1.0) * gain - p.kappa_R) * rho
    dr33 = -2.0 * gain * abs(rho) ** 2
    return np.array([drho, dr33], dtype=complex)


@dataclass(frozen=True)
class ModeRates:
    kappa: float
    kappa_R: float
    omega_Gamma: float = 0.0
    omega_k: float = 0.0


@dataclass(frozen=True)
class MultimodeState:
    A: tuple[complex, ...]
    rho: tuple[complex, ...]
    rho33: float = 1.0

    def __post_init__(self):
        if not self.rho:
            raise ValueError("mode list must not be empty")
        if self.A and len(self.A) != len(self.rho):
            raise ValueError("A and rho must have one entry per mode")

    def as_array(self, eliminated: bool = False) -> np.ndarray:
        parts = [] if eliminated else list(self.A or [0.0] * len(self.rho))
        return np.array(parts + list(self.rho) + [self.rho33], dtype=complex)


def rhs_multimode(
    y: np.ndarray, p: PhysicalParams, modes: list[ModeRates], pump_on: bool = True, eliminated: bool = False
) -> np.ndarray:
    """Independent modes sharing the source population rho33."""
    _check_finite(y)
    if not modes:
        raise ValueError("mode list must not be empty")
    J = len(modes)
    kap = np.array([m.kappa for m in modes])
    kR = np.array([m.kappa_R for m in modes])
    wG = np.array([m.omega_Gamma for m in modes])
    wk = np.array([m.omega_k for m in modes])
    g = p.g2 if pump_on else 0.0
    r33 = y[-1].real
    if eliminated:
        rho = y[:J]
        gain = g**2 * p.N / kap
        drho = (1j * wG + (2.0 * r33 - 1.0) * gain - kR) * rho
        dr33 = -2.0 * np.sum(gain * np.abs(rho) ** 2)
        return np.concatenate([drho, [dr33]]).astype(complex)
    A, rho = y[:J], y[J : 2 * J]
    dA = -(1j * wk + kap) * A - 1j * g * p.N * rho
    drho = (1j * wG - kR) * rho - 1j * g * (1.0 - 2.0 * r33) * A
    dr33 = -2.0 * g * np.sum((rho * np.conj(A)).imag)
    return np.concatenate([dA, drho, [dr33]]).astype(complex)


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform grid of momentum components along the recoil axis (kg m/s)."""

    p: np.ndarray
    weights: np.ndarray

    @classmethod
    def for_distribution(cls, dist: MomentumDistribution, cells: int = 321, span: float = 20.0) -> "MomentumGrid":
        if dist.kind is DistributionKind.DELTA:
            return cls(np.zeros(1), np.ones(1))
        if cells < 3 or cells % 2 == 0:
            raise ValueError("cells must be odd and >= 3 so the grid is centred")
        dp = 2.0 * span * dist.width / (cells - 1)
        resolved = dist.width / dp
        if resolved < 8.0:
            need = int(math.ceil(16.0 * span)) + 1
            need += 1 - need % 2
            raise ValueError(f"grid under-resolves the distribution ({resolved:.2f} cells per width); need cells >= {need}")
        p = dp * (np.arange(cells) - (cells - 1) / 2)
        w = dist.cdf(p + dp / 2) - dist.cdf(p - dp / 2)
        return cls(p, w / math.fsum(w))

    @property
    def size(self) -> int:
        return self.p.size


@dataclass(frozen=True)
class KineticState:
    rho: np.ndarray
    pop: np.ndarray
    A: complex = 0.0

    def as_array(self, eliminated: bool = False) -> np.ndarray:
        head = [] if eliminated else [self.A]
        return np.concatenate([np.asarray(head, dtype=complex), self.rho.astype(complex), self.pop.astype(complex)])

    @classmethod
    def seeded(cls, grid: MomentumGrid, rho0: float) -> "KineticState":
        return cls(rho0 * grid.weights.astype(complex), grid.weights.copy(), 0.0)


def kinetic_phase_rates(grid: MomentumGrid, species: AtomSpecies, theta: float) -> np.ndarray:
    """-(omega_k - omega_kbar) for each grid cell."""
    return recoil_frequency(species, theta) + grid.p * recoil_momentum(species, theta) / species.mass


def _fixed_sum(x: np.ndarray) -> complex:
    return complex(math.fsum(x.real), math.fsum(x.imag))


def rhs_kinetic(
    y: np.ndarray,
    p: PhysicalParams,
    grid: MomentumGrid,
    phase_rates: np.ndarray,
    pump_on: bool = True,
    eliminated: bool = False,
) -> np.ndarray:
    """Momentum-resolved model; kappa_R_prime acts on every cell, Gamma emerges."""
    _check_finite(y)
    M = grid.size
    g = p.g2 if pump_on else 0.0
    off = 0 if eliminated else 1
    rho = y[off : off + M]
    pop = y[off + M :].real
    total = _fixed_sum(rho)
    A = eliminate_field(total, p) if eliminated else y[0]
    drho = (1j * phase_rates - p.kappa_R_prime) * rho - 1j * g * (grid.weights - 2.0 * pop) * A
    dpop = -2.0 * g * (rho * np.conj(A)).imag
    if eliminated:
        return np.concatenate([drho, dpop.astype(complex)])
    dA = -(1j * p.omega_k + p.kappa) * A - 1j * g * p.N * total
    return np.concatenate([[dA], drho, dpop.astype(complex)])


# --- model wrappers used by the integrator ---------------------------------


class Model:
    """Base class: subclasses define the state layout."""

    n_modes = 1

    def rhs(self, y: np.ndarray, pump_on: bool) -> np.ndarray:
        raise NotImplementedError

    def fields(self, y: np.ndarray, pump_on: bool = True) -> np.ndarray:
        return np.zeros(self.n_modes, dtype=complex)

    def coherences(self, y: np.ndarray) -> np.ndarray:
        return np.zeros(self.n_modes, dtype=complex)

    def rho33(self, y: np.ndarray) -> float:
        return math.nan

    def mode_kappas(self) -> np.ndarray:
        return np.zeros(self.n_modes)

    def photon_flux(self, y: np.ndarray, pump_on: bool = True) -> float:
        """Photons leaving the sample per unit time, sum of 2 kappa_j |A_j|^2."""
        return float(np.sum(2.0 * self.mode_kappas() * np.abs(self.fields(y, pump_on)) ** 2))

    @property
    def N(self) -> float:
        return math.nan


class FunctionModel(Model):
    """Wrap a bare ``f(y, pump_on)`` (used for generic ODE checks)."""

    n_modes = 0

    def __init__(self, fn):
        self.fn = fn

    def rhs(self, y, pump_on):
        return np.asarray(self.fn(y, pump_on), dtype=complex)


class ReducedModel(Model):
    def __init__(self, p: PhysicalParams):
        self.p = p

    @property
    def N(self):
        return self.p.N

    def rhs(self, y, pump_on):
        return rhs_reduced(y, self.p, pump_on)

    def fields(self, y, pump_on=True):
        return np.array([y[0]])

    def coherences(self, y):
        return np.array([y[1]])

    def rho33(self, y):
        return float(y[2].real)

    def mode_kappas(self):
        return np.array([self.p.kappa])

    def initial_state(self, rho0: float | None = None) -> np.ndarray:
        return ReducedState.seeded(self.p.N, rho0).as_array()


class EliminatedModel(Model):
    def __init__(self, p: PhysicalParams, warn: bool = True):
        if p.kappa <= 0:
            raise ValueError("field elimination needs kappa > 0")
        if warn:
            check_bad_cavity(p)
        self.p = p

    @property
    def N(self):
        return self.p.N

    def rhs(self, y, pump_on):
        return rhs_eliminated(y, self.p, pump_on)

    def fields(self, y, pump_on=True):
        # the slaved field vanishes with the coupling
        g = 1.0 if pump_on else 0.0
        return g * np.array([eliminate_field(y[0], self.p)])

    def coherences(self, y):
        return np.array([y[0]])

    def rho33(self, y):
        return float(y[1].real)

    def mode_kappas(self):
        return np.array([self.p.kappa])

    def initial_state(self, rho0: float | None = None) -> np.ndarray:
        s = ReducedState.seeded(self.p.N, rho0)
        return np.array([s.rho, s.rho33], dtype=complex)


class MultimodeModel(Model):
    def __init__(self, p: PhysicalParams, modes: list[ModeRates], eliminated: bool = True):
        if not modes:
            raise ValueError("mode list must not be empty")
        self.p = p
        self.modes = list(modes)
        self.eliminated = eliminated
        self.n_modes = len(modes)
        self._kappas = np.array([m.kappa for m in modes])

    @property
    def N(self):
        return self.p.N

    def rhs(self, y, pump_on):
        return rhs_multimode(y, self.p, self.modes, pump_on, self.eliminated)

    def coherences(self, y):
        J = self.n_modes
        return y[:J] if self.eliminated else y[J : 2 * J]

    def fields(self, y, pump_on=True):
        if self.eliminated:
            g = self.p.g2 if pump_on else 0.0
            return -1j * g * self.p.N * self.coherences(y) / self._kappas
        return y[: self.n_modes]

    def rho33(self, y):
        return float(y[-1].real)

    def mode_kappas(self):
        return self._kappas

    def initial_state(self, rho0: float | None = None) -> np.ndarray:
        s = quantum_seed(self.p.N) if rho0 is None else rho0
        st = MultimodeState((0.0,) * self.n_modes, (s,) * self.n_modes, 1.0)
        return st.as_array(self.eliminated)


class KineticModel(Model):
    def __init__(
        self,
        p: PhysicalParams,
        dist: MomentumDistribution,
        species: AtomSpecies,
        theta: float,
        cells: int = 321,
        eliminated: bool = False,
    ):
        self.p = p
        self.dist = dist
        self.grid = MomentumGrid.for_distribution(dist, cells)
        self.phase_rates = kinetic_phase_rates(self.grid, species, theta)
        self.eliminated = eliminated

    @property
    def N(self):
        return self.p.N

    def rhs(self, y, pump_on):
        return rhs_kinetic(y, self.p, self.grid, self.phase_rates, pump_on, self.eliminated)

    def _off(self):
        return 0 if self.eliminated else 1

    def coherences(self, y):
        o, M = self._off(), self.grid.size
        return np.array([_fixed_sum(y[o : o + M])])

    def fields(self, y, pump_on=True):
        if self.eliminated:
            g = 1.0 if pump_on else 0.0
            return g * eliminate_field(self.coherences(y), self.p)
        return np.array([y[0]])

    def rho33(self, y):
        o, M = self._off(), self.grid.size
        return math.fsum(y[o + M :].real)

    def mode_kappas(self):
        return np.array([self.p.kappa])

    def initial_state(self, rho0: float | None = None) -> np.ndarray:
        s = quantum_seed(self.p.N) if rho0 is None else rho0
        return KineticState.seeded(self.grid, s).as_array(self.eliminated)
