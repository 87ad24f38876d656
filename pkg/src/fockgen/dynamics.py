"""Pulse envelopes and time propagation.

Two delayed Gaussian pulses drive the system: the cavity coupling peaks at
``t = 0`` and the classical drive peaks a delay ``tau`` later (``tau >= 0``
is the counterintuitive order, cavity first).  The state is integrated with
an adaptive explicit Runge-Kutta scheme with local error control on the state
vector; the norm is never renormalized, so its drift stays observable as a
quality diagnostic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import PropagationError, ValidationError
from .model import (
    ModelParams,
    SemiclassicalParams,
    dimension,
    effective_terms,
    flat_index,
    semiclassical_terms,
)

NORM_DRIFT_LIMIT = 1e-6
WINDOW_TAIL_LIMIT = 1e-6
WINDOW_PADDING = 2.5  # multiples of t_int on each side; keeps tails < 1e-6
RWA_RATIO_LIMIT = 0.05
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11


def default_window(t_int: float, tau: float) -> tuple[float, float]:
    """Simulation window wide enough that both envelope tails are < 1e-6."""
    return (-WINDOW_PADDING * t_int, tau + WINDOW_PADDING * t_int)


@dataclass(frozen=True)
class PulseSchedule:
    """Peak amplitudes, shared width, delay, and simulation window.

    g_max, omega_max
        Peak Rabi frequencies of the cavity coupling and the classical drive
        (units of delta; negative values are permitted, populations do not
        depend on the signs).
    t_int
        Full width at half maximum of both Gaussian envelopes (units of
        1/delta).
    tau
        Delay of the drive peak after the cavity peak.
    t_start, t_end
        Simulation window; filled from :func:`default_window` when omitted.
        Both envelopes must be below 1e-6 of their peak at the window edges.
    """

    g_max: float
    omega_max: float
    t_int: float
    tau: float
    t_start: float | None = None
    t_end: float | None = None

    def __post_init__(self):
        for name in ("g_max", "omega_max", "t_int", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.t_int <= 0:
            raise ValidationError(f"t_int must be positive, got {self.t_int}")
        if self.t_start is None or self.t_end is None:
            t0, t1 = default_window(self.t_int, self.tau)
            if self.t_start is None:
                object.__setattr__(self, "t_start", t0)
            if self.t_end is None:
                object.__setattr__(self, "t_end", t1)
        if not (self.t_start < self.t_end):
            raise ValidationError(f"empty window: [{self.t_start}, {self.t_end}]")
        for edge in (self.t_start, self.t_end):
            cavity_tail = math.exp(-((edge / self.sigma) ** 2))
            drive_tail = math.exp(-(((edge - self.tau) / self.sigma) ** 2))
            if cavity_tail > WINDOW_TAIL_LIMIT or drive_tail > WINDOW_TAIL_LIMIT:
                raise ValidationError(
                    f"window [{self.t_start}, {self.t_end}] clips the pulses: envelope "
                    f"shape at t = {edge} is {max(cavity_tail, drive_tail):.2e} of peak "
                    f"(limit {WINDOW_TAIL_LIMIT})"
                )

    @property
    def sigma(self) -> float:
        """1/e half width of ``exp(-(t/sigma)^2)`` matching the stated FWHM."""
        return self.t_int / (2.0 * math.sqrt(math.log(2.0)))


def envelope(schedule: PulseSchedule, t):
    """Instantaneous amplitudes ``(g(t), omega(t))``; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    sig = schedule.sigma
    g = schedule.g_max * np.exp(-((t / sig) ** 2))
    w = schedule.omega_max * np.exp(-(((t - schedule.tau) / sig) ** 2))
    if t.ndim == 0:
        return float(g), float(w)
    return g, w


def ground_state(n_max: int) -> np.ndarray:
    """Lower atomic state with zero exchanged photons."""
    state = np.zeros(dimension(n_max), dtype=complex)
    state[flat_index("-", 0)] = 1.0
    return state


def basis_state(n_max: int, atom: str, n: int) -> np.ndarray:
    state = np.zeros(dimension(n_max), dtype=complex)
    state[flat_index(atom, n)] = 1.0
    return state


def _validate_initial(initial, dim: int) -> np.ndarray:
    state = np.asarray(initial, dtype=complex)
    if state.shape != (dim,):
        raise ValidationError(f"initial state must have shape ({dim},), got {state.shape}")
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-8:
        raise ValidationError(f"initial state norm {norm} deviates from 1 beyond 1e-8")
    return state


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled populations and norm drift from one propagation.

    ``populations[k, i]`` is ``|amplitude_i|^2`` at ``times[k]`` in flat basis
    order; ``norm_drift[k]`` is ``| ||state|| - 1 |`` there.  ``final_state``
    holds the complex amplitudes at the last sample (None when the record was
    re-read from disk, since only populations are serialized).
    """

    times: np.ndarray
    populations: np.ndarray
    norm_drift: np.ndarray
    final_state: np.ndarray | None = None

    def __post_init__(self):
        if self.populations.shape[0] != len(self.times):
            raise ValidationError("populations and times have inconsistent lengths")
        if self.norm_drift.shape != self.times.shape:
            raise ValidationError("norm_drift and times have inconsistent lengths")

    @property
    def dim(self) -> int:
        return self.populations.shape[1]

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def population(self, atom: str, n: int) -> np.ndarray:
        """Time series of one basis-state population."""
        return self.populations[:, flat_index(atom, n)]


def _record_from_solution(sol) -> TrajectoryRecord:
    amplitudes = sol.y.T  # (samples, dim)
    populations = np.abs(amplitudes) ** 2
    norms = np.sqrt(populations.sum(axis=1))
    drift = np.abs(norms - 1.0)
    if drift.max() >= NORM_DRIFT_LIMIT:
        k = int(np.argmax(drift))
        raise PropagationError(
            f"norm drift {drift.max():.3e} at t = {sol.t[k]:.6g} exceeds the "
            f"{NORM_DRIFT_LIMIT} bound; integration accuracy is insufficient",
            t_failure=float(sol.t[k]),
        )
    return TrajectoryRecord(
        times=sol.t.copy(),
        populations=populations,
        norm_drift=drift,
        final_state=amplitudes[-1].copy(),
    )


def _run_solver(rhs, schedule, y0, sampling, rtol, atol, max_step=np.inf):
    if sampling < 2:
        raise ValidationError(f"sampling must be >= 2, got {sampling}")
    t_eval = np.linspace(schedule.t_start, schedule.t_end, sampling)
    sol = solve_ivp(
        rhs,
        (schedule.t_start, schedule.t_end),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        max_step=max_step,
    )
    if not sol.success:
        t_reached = float(sol.t[-1]) if len(sol.t) else schedule.t_start
        raise PropagationError(
            f"integration failed at t = {t_reached:.6g}: {sol.message}",
            t_failure=t_reached,
        )
    return _record_from_solution(sol)


def propagate(
    params: ModelParams,
    schedule: PulseSchedule,
    initial=None,
    sampling: int = 2000,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TrajectoryRecord:
    """Integrate the reduced model over the schedule window.

    The state obeys ``i d/dt state = H(t) state`` with
    ``H(t) = diag + g(t) * exchange + (omega(t)/2) * atomic``.  Norm drift
    beyond 1e-6 aborts with a diagnostic rather than being hidden by
    renormalization.
    """
    dim = params.dim
    y0 = ground_state(params.n_max) if initial is None else _validate_initial(initial, dim)
    diag, exchange, atomic = effective_terms(params)
    sig, tau = schedule.sigma, schedule.tau
    gm, wm = schedule.g_max, schedule.omega_max

    def rhs(t, y):
        g = gm * math.exp(-((t / sig) ** 2))
        w = wm * math.exp(-(((t - tau) / sig) ** 2))
        return -1j * (diag * y + g * (exchange @ y) + (0.5 * w) * (atomic @ y))

    return _run_solver(rhs, schedule, y0, sampling, rtol, atol)


@dataclass(frozen=True)
class AdiabaticityReport:
    """Dimensionless slowness products; all must exceed ~10 for the state to
    track its dressed level away from the designed crossings."""

    maser_detuning_product: float
    cavity_detuning_product: float
    coupling_product: float
    passed: bool


def adiabaticity_metric(params: ModelParams, schedule: PulseSchedule) -> AdiabaticityReport:
    """Products of detunings and peak coupling with the pulse width."""
    products = (
        abs(params.delta_m) * schedule.t_int,
        abs(params.delta_c) * schedule.t_int,
        abs(schedule.g_max) * schedule.t_int,
    )
    return AdiabaticityReport(
        maser_detuning_product=products[0],
        cavity_detuning_product=products[1],
        coupling_product=products[2],
        passed=all(p > 10.0 for p in products),
    )


def rwa_ratio(sc: SemiclassicalParams, schedule: PulseSchedule) -> float:
    """Peak coupling over the atomic frequency; must stay well below 1."""
    return max(abs(schedule.g_max), abs(schedule.omega_max)) / sc.omega_0


def propagate_semiclassical(
    sc: SemiclassicalParams,
    params: ModelParams,
    schedule: PulseSchedule,
    initial=None,
    sampling: int = 2000,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    steps_per_period: int = 20,
) -> TrajectoryRecord:
    """Integrate the full lab-frame model with the explicit drive phase.

    The cavity stays quantized and the drive enters as a classical field with
    phase ``theta_0 + omega_m t``; populations come out on the atom (x)
    cavity-photon basis in the same flat ordering as the reduced model.  The
    step size is capped at ``1/steps_per_period`` of the drive period so the
    fast phase is always resolved.
    """
    sc.validate_against(params)
    ratio = rwa_ratio(sc, schedule)
    if ratio >= RWA_RATIO_LIMIT:
        raise ValidationError(
            f"peak coupling / atomic frequency = {ratio:.3f} exceeds the "
            f"rotating-wave validity bound {RWA_RATIO_LIMIT}"
        )
    if sc.omega_m < 100.0 * params.delta:
        warnings.warn(
            f"omega_m = {sc.omega_m} is below 100*delta; time-scale separation "
            "from the envelopes is marginal",
            UserWarning,
            stacklevel=2,
        )
    if steps_per_period < 20:
        raise ValidationError(f"steps_per_period must be >= 20, got {steps_per_period}")

    dim = dimension(params.n_max)
    y0 = ground_state(params.n_max) if initial is None else _validate_initial(initial, dim)
    diag, exchange, raising = semiclassical_terms(sc, params.n_max)
    lowering = raising.T.copy()
    sig, tau = schedule.sigma, schedule.tau
    gm, wm = schedule.g_max, schedule.omega_max
    omega_m, theta_0 = sc.omega_m, sc.theta_0

    def rhs(t, y):
        g = gm * math.exp(-((t / sig) ** 2))
        w = wm * math.exp(-(((t - tau) / sig) ** 2))
        phase = np.exp(-1j * (theta_0 + omega_m * t))
        drive = (0.5 * w) * (phase * (raising @ y) + np.conj(phase) * (lowering @ y))
        return -1j * (diag * y + g * (exchange @ y) + drive)

    max_step = 2.0 * math.pi / (omega_m * steps_per_period)
    return _run_solver(rhs, schedule, y0, sampling, rtol, atol, max_step=max_step)


@dataclass(frozen=True)
class TruncationReport:
    """Effect of enlarging the basis on the final populations."""

    n_max: int
    n_max_enlarged: int
    max_population_difference: float
    boundary_population: float
    converged: bool
    suggested_n_max: int | None


def truncation_check(
    params: ModelParams,
    schedule: PulseSchedule,
    initial=None,
    increment: int = 4,
    sampling: int = 400,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> TruncationReport:
    """Re-propagate with the ladder enlarged by ``increment`` photon slots.

    Converged when the final populations agree below 1e-6 and the topmost
    photon slot of the smaller run never holds more than 1e-8 of population;
    otherwise a larger truncation is suggested.
    """
    if increment < 1:
        raise ValidationError(f"increment must be >= 1, got {increment}")
    enlarged = ModelParams(
        delta=params.delta,
        delta_m=params.delta_m,
        delta_c=params.delta_c,
        n_max=params.n_max + increment,
    )
    small = propagate(params, schedule, initial=initial, sampling=sampling, rtol=rtol, atol=atol)
    if initial is not None:
        big_initial = np.zeros(enlarged.dim, dtype=complex)
        big_initial[: params.dim] = np.asarray(initial, dtype=complex)
    else:
        big_initial = None
    big = propagate(enlarged, schedule, initial=big_initial, sampling=sampling, rtol=rtol, atol=atol)

    padded = np.zeros(enlarged.dim)
    padded[: params.dim] = small.final_populations
    diff = float(np.abs(padded - big.final_populations).max())
    top = flat_index("-", params.n_max)
    boundary = float(small.populations[:, top : top + 2].sum(axis=1).max())
    converged = diff < 1e-6 and boundary <= 1e-8
    return TruncationReport(
        n_max=params.n_max,
        n_max_enlarged=enlarged.n_max,
        max_population_difference=diff,
        boundary_population=boundary,
        converged=converged,
        suggested_n_max=None if converged else params.n_max + 2 * increment,
    )
