"""Explicit conservative transport of the density profile.

One step: face fluxes (central diffusion, donor-cell drift), forward-Euler
update, round-off-scale negativity repair, fresh signal solve. Interior
fluxes telescope and both boundary faces carry exactly zero flux, so total
mass is conserved to round-off at every step. dt collapse and sup-norm
runaway terminate through StepOutcome instead of exceptions, because they
double as the blow-up detector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .elliptic import EllipticSolution, solve_v
from .errors import NumericalError, RadtaxisError
from .grid import RadialGrid, RadialProfile, boundary_trace, integrate, lp_norm
from .model import DiffusionLaw, RunConfig, sample_initial

_NEG_CLIP_REL = 1e-13


class StepStatus(Enum):
    ADVANCED = "advanced"
    DT_UNDERFLOW = "dt_underflow"
    THRESHOLD_EXCEEDED = "threshold_exceeded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SimState:
    """Trajectory state; the elliptic solution always matches the current u."""

    t: float
    dt: float
    step_index: int
    u: RadialProfile
    elliptic: EllipticSolution
    initial_mass: float
    min_u_watermark: float


@dataclass(frozen=True)
class StepOutcome:
    """Step result; `state` is populated only when status is ADVANCED."""

    status: StepStatus
    state: SimState | None = None
    measurement: float | None = None
    message: str = ""


@dataclass(frozen=True)
class TraceRecord:
    """One recorder sample; lp entries align with config.lp_exponents."""

    t: float
    dt: float
    mass: float
    linf: float
    lp: tuple[float, ...]
    u_boundary: float
    boundary_flux: float
    u_min: float


Recorder = Callable[[TraceRecord, SimState], None]


def initial_state(config: RunConfig) -> SimState:
    """Sample u0, solve the signal once, and package the t = 0 state."""
    grid = RadialGrid(config.geometry, config.cells)
    u0 = sample_initial(config.initial, grid)
    elliptic = solve_v(u0, config.boundary)
    return SimState(
        t=0.0,
        dt=0.0,
        step_index=0,
        u=u0,
        elliptic=elliptic,
        initial_mass=integrate(u0),
        min_u_watermark=float(np.min(u0.values)),
    )


def face_flux(u: RadialProfile, vr_faces: np.ndarray, law: DiffusionLaw) -> np.ndarray:
    """Face fluxes A * (D(u_face) du/dr - u_upwind * vr), zero at both boundaries.

    D is evaluated at the arithmetic mean of the adjacent cells; the drift
    uses the donor cell (vr >= 0 transports outward, so the inner cell).
    """
    values = u.values
    if not (np.isfinite(values).all() and np.isfinite(vr_faces).all()):
        raise NumericalError("non-finite input to face_flux")
    grid = u.grid
    flux = np.zeros(grid.n_cells + 1)
    u_face = np.maximum(0.5 * (values[:-1] + values[1:]), 0.0)
    diffusive = law.eval_unchecked(u_face) * (values[1:] - values[:-1]) / grid.dr
    vr = vr_faces[1:-1]
    upwind = np.where(vr >= 0.0, values[:-1], values[1:])
    flux[1:-1] = grid.face_areas[1:-1] * (diffusive - upwind * vr)
    return flux


def cfl_dt(u: RadialProfile, vr_faces: np.ndarray, law: DiffusionLaw, cfl_safety: float) -> float:
    """Stable step: cfl_safety * min(dr^2 / (2 max D), dr / max |vr|)."""
    values = u.values
    grid = u.grid
    u_face = np.maximum(0.5 * (values[:-1] + values[1:]), 0.0)
    d_max = float(law.eval_unchecked(u_face).max()) if u_face.size else law.eval(0.0)
    dt = grid.dr ** 2 / (2.0 * d_max)
    vr_max = float(np.abs(vr_faces).max())
    if vr_max > 0.0:
        dt = min(dt, grid.dr / vr_max)
    return cfl_safety * dt


def _attempt_update(state: SimState, flux: np.ndarray, dt: float, grid: RadialGrid):
    u_new = state.u.values + (dt / grid.volumes) * (flux[1:] - flux[:-1])
    if not np.isfinite(u_new).all():
        where = int(np.flatnonzero(~np.isfinite(u_new))[0])
        return None, where
    return u_new, None


def step(state: SimState, config: RunConfig, dt: float) -> StepOutcome:
    """One forward-Euler step at the supplied dt.

    Never raises past a well-formed outcome. A threshold of None means
    unbounded and a dt_min of None means zero (callers normally resolve both;
    see `advance`).
    """
    dt_min = config.dt_min if config.dt_min is not None else 0.0
    threshold = config.u_max_threshold if config.u_max_threshold is not None else math.inf
    if dt < dt_min:
        return StepOutcome(StepStatus.DT_UNDERFLOW, measurement=dt,
                           message=f"dt {dt:.3e} fell below dt_min {dt_min:.3e}")

    grid = state.u.grid
    try:
        flux = face_flux(state.u, state.elliptic.vr_faces, config.diffusion)
    except (NumericalError, ValueError) as exc:
        return StepOutcome(StepStatus.NUMERICAL_FAILURE, message=str(exc))

    # Undershoots beyond round-off scale get one dt-halving retry.
    used_dt = dt
    u_new = None
    pre_clip_min = 0.0
    for attempt in (dt, 0.5 * dt):
        candidate, bad_cell = _attempt_update(state, flux, attempt, grid)
        if candidate is None:
            return StepOutcome(StepStatus.NUMERICAL_FAILURE, measurement=float(bad_cell),
                               message=f"non-finite density in cell {bad_cell}")
        pre_clip_min = float(candidate.min())
        linf = float(np.abs(candidate).max())
        if pre_clip_min >= -_NEG_CLIP_REL * linf:
            u_new, used_dt = candidate, attempt
            break
    if u_new is None:
        return StepOutcome(StepStatus.NUMERICAL_FAILURE, measurement=pre_clip_min,
                           message=f"negative density {pre_clip_min:.3e} persisted after dt halving")

    # Clip round-off negatives and remove the added mass proportionally, so
    # positivity and conservation hold simultaneously.
    if pre_clip_min < 0.0:
        negative = u_new < 0.0
        clipped_mass = -float(np.dot(grid.volumes[negative], u_new[negative]))
        u_new[negative] = 0.0
        mass_now = float(np.dot(grid.volumes, u_new))
        if mass_now > 0.0:
            u_new *= (mass_now - clipped_mass) / mass_now

    linf_new = float(u_new.max())
    if linf_new > threshold:
        return StepOutcome(StepStatus.THRESHOLD_EXCEEDED, measurement=linf_new,
                           message=f"sup norm {linf_new:.6e} exceeded threshold {threshold:.6e}")

    u_profile = RadialProfile(grid, u_new)
    try:
        elliptic = solve_v(u_profile, config.boundary)
    except RadtaxisError as exc:
        return StepOutcome(StepStatus.NUMERICAL_FAILURE, message=f"signal solve failed: {exc}")

    new_state = SimState(
        t=state.t + used_dt,
        dt=used_dt,
        step_index=state.step_index + 1,
        u=u_profile,
        elliptic=elliptic,
        initial_mass=state.initial_mass,
        min_u_watermark=min(state.min_u_watermark, pre_clip_min),
    )
    return StepOutcome(StepStatus.ADVANCED, state=new_state)


def make_record(state: SimState, config: RunConfig) -> TraceRecord:
    u = state.u
    return TraceRecord(
        t=state.t,
        dt=state.dt,
        mass=integrate(u),
        linf=lp_norm(u, math.inf),
        lp=tuple(lp_norm(u, p) for p in config.lp_exponents),
        u_boundary=boundary_trace(u),
        boundary_flux=state.elliptic.boundary_flux,
        u_min=float(np.min(u.values)),
    )


def resolve_limits(config: RunConfig, state: SimState, first_dt: float) -> RunConfig:
    """Fill in the default blow-up triggers relative to the initial state.

    u_max_threshold defaults to 1e6 * ||u0||_inf (unbounded for zero data)
    and dt_min to 1e-12 * the first stable dt.
    """
    threshold = config.u_max_threshold
    if threshold is None:
        linf0 = float(np.max(state.u.values)) if state.u.values.size else 0.0
        threshold = 1e6 * linf0 if linf0 > 0.0 else math.inf
    dt_min = config.dt_min if config.dt_min is not None else 1e-12 * first_dt
    return replace(config, u_max_threshold=threshold, dt_min=dt_min)


def advance(state: SimState, config: RunConfig, recorder: Recorder | None = None) -> tuple[StepOutcome, SimState]:
    """March to t_end, the sup-norm threshold, or dt underflow.

    The recorder fires at t = 0, every output_stride accepted steps, and at
    termination. Identical configs yield bit-identical trajectories and
    recorder streams.
    """
    resolved = None
    last_recorded = -1

    def record(current: SimState) -> None:
        nonlocal last_recorded
        if recorder is not None and current.step_index != last_recorded:
            recorder(make_record(current, config), current)
            last_recorded = current.step_index

    record(state)
    while state.t < config.t_end:
        dt = cfl_dt(state.u, state.elliptic.vr_faces, config.diffusion, config.cfl_safety)
        if resolved is None:
            resolved = resolve_limits(config, state, dt)
        outcome = step(state, resolved, dt)
        if outcome.status is not StepStatus.ADVANCED:
            record(state)
            return outcome, state
        state = outcome.state
        if state.step_index % config.output_stride == 0:
            record(state)
    record(state)
    return StepOutcome(StepStatus.ADVANCED, state=state, message="horizon reached"), state
