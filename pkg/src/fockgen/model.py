"""Basis, parameters, and Hamiltonian construction for the atom + two-field system.

The reduced model lives on a ladder of exchanged-photon states: ``n`` photons
have moved from the strong (classical) drive into the cavity mode, and the atom
is either in its lower ``-`` or upper ``+`` state.  Everything is expressed in
normalized units where the frequency difference ``delta`` between the two
fields sets the energy scale (``delta = 1``) and times are in units of
``1/delta``.  Conversion from laboratory quantities happens only in
:func:`realize`.

Flat basis ordering is interleaved, ``(-,0), (+,0), (-,1), (+,1), ...``, so
photon-exchange couplings stay near the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import constants

from .errors import ValidationError

ATOM_LOWER = "-"
ATOM_UPPER = "+"

HERMITICITY_ATOL = 1e-12


def dimension(n_max: int) -> int:
    """Size of the truncated basis: two atomic states per photon number."""
    return 2 * (n_max + 1)


def flat_index(atom: str, n: int) -> int:
    """Position of state (atom, n) in the interleaved flat ordering."""
    if atom not in (ATOM_LOWER, ATOM_UPPER):
        raise ValidationError(f"atom label must be '+' or '-', got {atom!r}")
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n}")
    return 2 * n + (1 if atom == ATOM_UPPER else 0)


@dataclass(frozen=True)
class BasisIndex:
    """Label of one basis state: atomic level and exchanged-photon count."""

    atom: str
    n: int

    def __post_init__(self):
        flat_index(self.atom, self.n)  # validates

    @property
    def flat(self) -> int:
        return flat_index(self.atom, self.n)


def basis_labels(n_max: int) -> list[BasisIndex]:
    """All basis labels in flat order."""
    out = []
    for n in range(n_max + 1):
        out.append(BasisIndex(ATOM_LOWER, n))
        out.append(BasisIndex(ATOM_UPPER, n))
    return out


@dataclass(frozen=True)
class ModelParams:
    """Normalized detunings and basis truncation of the reduced model.

    delta
        Difference between the cavity and drive frequencies; the global unit
        of energy (must be positive).
    delta_m
        Detuning of the atomic transition from the drive frequency.
    delta_c
        Detuning of the atomic transition from the cavity frequency.  The
        three detunings satisfy ``delta_m - delta_c = delta`` identically; if
        ``delta_c`` is omitted it is filled in from that identity.
    n_max
        Largest exchanged-photon number kept in the basis (>= 1).
    """

    delta: float
    delta_m: float
    delta_c: float | None = None
    n_max: int = 7

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValidationError(f"delta must be finite and positive, got {self.delta}")
        if not math.isfinite(self.delta_m):
            raise ValidationError(f"delta_m must be finite, got {self.delta_m}")
        if self.delta_c is None:
            object.__setattr__(self, "delta_c", self.delta_m - self.delta)
        elif abs(self.delta_m - self.delta_c - self.delta) > 1e-12 * max(1.0, abs(self.delta)):
            raise ValidationError(
                f"detunings inconsistent: delta_m - delta_c = "
                f"{self.delta_m - self.delta_c} but delta = {self.delta}"
            )
        if not isinstance(self.n_max, int) or self.n_max < 1:
            raise ValidationError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @classmethod
    def symmetric(cls, delta: float = 1.0, n_max: int = 7) -> "ModelParams":
        """Detunings split symmetrically about the atomic line:
        ``delta_m = delta/2 = -delta_c``."""
        return cls(delta=delta, delta_m=delta / 2.0, delta_c=-delta / 2.0, n_max=n_max)

    @property
    def dim(self) -> int:
        return dimension(self.n_max)


@dataclass(frozen=True)
class HermitianOperator:
    """Dense complex Hermitian matrix on the truncated flat basis."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValidationError(f"expected shape {(self.dim, self.dim)}, got {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValidationError("matrix entries must be finite")
        defect = np.abs(m - m.conj().T).max()
        if defect > HERMITICITY_ATOL:
            raise ValidationError(f"matrix is not Hermitian: max |H - H^dag| = {defect:.3e}")
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_array(cls, entries) -> "HermitianOperator":
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {m.shape}")
        return cls(dim=m.shape[0], entries=m)


@lru_cache(maxsize=32)
def _effective_terms_cached(delta: float, delta_m: float, n_max: int):
    dim = dimension(n_max)
    ladder = np.arange(n_max + 1, dtype=float)

    diag = np.empty(dim)
    diag[0::2] = delta * ladder            # (-, n)
    diag[1::2] = delta * ladder + delta_m  # (+, n)

    # photon exchange: (+, n-1) <-> (-, n) with weight sqrt(n)
    exchange = np.zeros((dim, dim))
    for n in range(1, n_max + 1):
        exchange[2 * n - 1, 2 * n] = exchange[2 * n, 2 * n - 1] = math.sqrt(n)

    # atomic coupling at fixed n: (+, n) <-> (-, n), unit weight
    atomic = np.zeros((dim, dim))
    for n in range(n_max + 1):
        atomic[2 * n + 1, 2 * n] = atomic[2 * n, 2 * n + 1] = 1.0

    exchange.setflags(write=False)
    atomic.setflags(write=False)
    diag.setflags(write=False)
    return diag, exchange, atomic


def effective_terms(params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Constant pieces of the reduced Hamiltonian.

    Returns ``(diag, exchange, atomic)`` such that the full matrix at
    instantaneous amplitudes ``(g, omega)`` is
    ``np.diag(diag) + g * exchange + (omega / 2) * atomic``.
    """
    return _effective_terms_cached(params.delta, params.delta_m, params.n_max)


def build_effective_hamiltonian(params: ModelParams, g: float, omega: float) -> HermitianOperator:
    """Reduced Hamiltonian on the exchanged-photon ladder.

    Matrix elements (all other entries vanish)::

        <-,n|H|-,n>     = delta * n
        <+,n|H|+,n>     = delta * n + delta_m
        <+,n|H|-,n>     = omega / 2
        <+,n-1|H|-,n>   = g * sqrt(n)

    plus Hermitian completion of the off-diagonals.
    """
    if not (math.isfinite(g) and math.isfinite(omega)):
        raise ValidationError(f"coupling amplitudes must be finite, got g={g}, omega={omega}")
    diag, exchange, atomic = effective_terms(params)
    h = np.diag(diag).astype(complex)
    h += g * exchange
    h += (omega / 2.0) * atomic
    return HermitianOperator(dim=params.dim, entries=h)


@dataclass(frozen=True)
class SemiclassicalParams:
    """Laboratory-frame frequencies for the full atom + quantized-cavity model
    driven by a classical field with explicit phase ``theta_0 + omega_m * t``.
    """

    omega_m: float
    omega_c: float
    omega_0: float
    theta_0: float = 0.0

    def __post_init__(self):
        for name in ("omega_m", "omega_c", "omega_0", "theta_0"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.omega_0 <= 0:
            raise ValidationError(f"omega_0 must be positive, got {self.omega_0}")

    @classmethod
    def from_model(cls, params: ModelParams, omega_m: float, theta_0: float = 0.0) -> "SemiclassicalParams":
        """Lab frequencies consistent with the normalized detunings:
        ``omega_c = omega_m + delta`` and ``omega_0 = omega_m + delta_m``."""
        return cls(
            omega_m=omega_m,
            omega_c=omega_m + params.delta,
            omega_0=omega_m + params.delta_m,
            theta_0=theta_0,
        )

    def validate_against(self, params: ModelParams) -> None:
        """Reject frequency sets whose differences disagree with ``params``."""
        scale = max(1.0, abs(self.omega_m))
        if abs(self.omega_c - self.omega_m - params.delta) > 1e-9 * scale:
            raise ValidationError(
                f"omega_c - omega_m = {self.omega_c - self.omega_m} "
                f"inconsistent with delta = {params.delta}"
            )
        if abs(self.omega_0 - self.omega_m - params.delta_m) > 1e-9 * scale:
            raise ValidationError(
                f"omega_0 - omega_m = {self.omega_0 - self.omega_m} "
                f"inconsistent with delta_m = {params.delta_m}"
            )


@lru_cache(maxsize=32)
def _semiclassical_terms_cached(omega_m: float, omega_c: float, omega_0: float, n_max: int):
    dim = dimension(n_max)
    ladder = np.arange(n_max + 1, dtype=float)

    diag = np.empty(dim)
    diag[0::2] = omega_c * ladder            # (-, n): free cavity
    diag[1::2] = omega_c * ladder + omega_0  # (+, n): cavity + atomic quantum

    _, exchange, _ = _effective_terms_cached(1.0, 0.0, n_max)  # same sqrt(n) pattern

    # classical drive raising part: |+,n><-,n|; the phase factor multiplies it
    raising = np.zeros((dim, dim))
    for n in range(n_max + 1):
        raising[2 * n + 1, 2 * n] = 1.0

    diag.setflags(write=False)
    raising.setflags(write=False)
    return diag, exchange, raising


def semiclassical_terms(sc: SemiclassicalParams, n_max: int):
    """Constant pieces of the lab-frame Hamiltonian: ``(diag, exchange, raising)``.

    The full matrix at time ``t`` with amplitudes ``(g, omega)`` is
    ``diag + g * exchange + (omega/2) * (e^{-i phi} raising + e^{+i phi} raising^T)``
    with ``phi = theta_0 + omega_m * t``.  The drive phase advances at the
    classical-field frequency ``omega_m``.
    """
    return _semiclassical_terms_cached(sc.omega_m, sc.omega_c, sc.omega_0, n_max)


def build_semiclassical_hamiltonian(
    sc: SemiclassicalParams, g: float, omega: float, t: float, n_max: int
) -> HermitianOperator:
    """Lab-frame Hamiltonian on the atom (x) cavity-photon basis at time ``t``.

    Diagonal ``omega_c * n`` (plus ``omega_0`` for the upper atomic state),
    cavity coupling ``g * sqrt(n)`` between ``(+, n-1)`` and ``(-, n)``, and
    drive coupling ``(omega/2) e^{-i(theta_0 + omega_m t)}`` from ``(-, n)``
    to ``(+, n)`` with its Hermitian conjugate.
    """
    if not (math.isfinite(g) and math.isfinite(omega) and math.isfinite(t)):
        raise ValidationError("g, omega, and t must be finite")
    if not isinstance(n_max, int) or n_max < 1:
        raise ValidationError(f"n_max must be an integer >= 1, got {n_max!r}")
    diag, exchange, raising = semiclassical_terms(sc, n_max)
    phase = np.exp(-1j * (sc.theta_0 + sc.omega_m * t))
    h = np.diag(diag).astype(complex)
    h += g * exchange
    h += (omega / 2.0) * (phase * raising + np.conj(phase) * raising.T)
    return HermitianOperator(dim=dimension(n_max), entries=h)


@dataclass(frozen=True)
class PhysicalRealization:
    """Laboratory quantities of an atom crossing a cavity mode and a classical
    beam, all in SI units.

    dipole            transition dipole moment magnitude (C m)
    mode_volume       effective cavity mode volume (m^3)
    maser_amplitude   classical field amplitude (V/m)
    velocity          atom speed (m/s)
    waist_c, waist_m  mode waists of cavity and beam (m)
    d                 separation of the two axis crossings (m)
    """

    dipole: float
    mode_volume: float
    maser_amplitude: float
    velocity: float
    waist_c: float
    waist_m: float
    d: float

    def __post_init__(self):
        for name in ("dipole", "mode_volume", "maser_amplitude", "velocity", "waist_c", "waist_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be finite and positive, got {value}")
        if not (math.isfinite(self.d) and self.d >= 0):
            raise ValidationError(f"d must be finite and non-negative, got {self.d}")


@dataclass(frozen=True)
class RealizedPulses:
    """Peak angular Rabi frequencies (rad/s) and envelope times (s) derived
    from a physical realization."""

    g_max: float
    omega_max: float
    t_int: float
    tau: float


def realize(phys: PhysicalRealization, frequencies: SemiclassicalParams) -> RealizedPulses:
    """Convert laboratory quantities to pulse parameters.

    Peak amplitudes are magnitudes (overall envelope signs are unobservable):
    the cavity vacuum coupling ``mu * sqrt(omega_c / (2 eps0 hbar V))`` and the
    classical drive ``mu * E / hbar``, both angular frequencies in rad/s.  The
    envelope full width at half maximum is ``2 (W_c / v) sqrt(ln 2)`` and the
    peak-to-peak delay is ``d / v``.
    """
    e_vac = math.sqrt(
        constants.hbar * frequencies.omega_c / (2.0 * constants.epsilon_0 * phys.mode_volume)
    )
    g_max = abs(phys.dipole * e_vac / constants.hbar)
    omega_max = abs(phys.dipole * phys.maser_amplitude / constants.hbar)
    t_int = 2.0 * (phys.waist_c / phys.velocity) * math.sqrt(math.log(2.0))
    tau = phys.d / phys.velocity
    return RealizedPulses(g_max=g_max, omega_max=omega_max, t_int=t_int, tau=tau)


def cyclic_to_angular(f: float) -> float:
    """Convert an ordinary (cyclic, Hz) frequency to an angular one (rad/s).

    Quoted Rabi frequencies are sometimes cyclic and sometimes angular; the
    normalized simulations never depend on the choice, but dimensionless
    products like ``g_max * t_int`` do.  Multiply by ``2 pi`` here, or divide
    with :func:`angular_to_cyclic`, to move between the two conventions.
    """
    return 2.0 * math.pi * f


def angular_to_cyclic(omega: float) -> float:
    """Inverse of :func:`cyclic_to_angular`."""
    return omega / (2.0 * math.pi)
