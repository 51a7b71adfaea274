"""Quasi-static signal equation 0 = Lap(v) - u v on the radial grid.

Boundary conditions: symmetry (zero flux) at the origin face and v = M at
r = R, imposed through the ghost value 2M - v_N so the Dirichlet closure is
second-order accurate; the boundary flux dv/dnu is a primary diagnostic.

The absorption term is lumped on the diagonal, so for u >= 0 the system
matrix is an M-matrix and the discrete solution inherits 0 <= v <= M and
radial monotonicity by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, NumericalError, SingularSystemError
from .model import BoundaryDatum, Geometry, unit_ball_volume
from .grid import RadialProfile, require_same_grid

_RESIDUAL_TOL = 1e-12

# Face conductances A/dr with the origin face zeroed, cached per grid since
# every transport step re-solves the signal on the same mesh.
_conductance_cache: dict[int, tuple] = {}


def _conductances(grid) -> np.ndarray:
    entry = _conductance_cache.get(id(grid))
    if entry is not None and entry[0] is grid:
        return entry[1]
    w0 = grid.face_areas / grid.dr
    w0 = np.concatenate(([0.0], w0[1:]))
    w0.flags.writeable = False
    if len(_conductance_cache) > 64:
        _conductance_cache.clear()
    _conductance_cache[id(grid)] = (grid, w0)
    return w0


@dataclass(frozen=True)
class EllipticSolution:
    """Signal profile v, its face gradients, and the outward boundary flux."""

    v: RadialProfile
    vr_faces: np.ndarray
    boundary_flux: float


def solve_v(u: RadialProfile, boundary: BoundaryDatum) -> EllipticSolution:
    """Solve the absorption equation for the current density profile.

    Flux form: A_{i+1/2} (v_{i+1} - v_i)/dr balanced against V_i u_i v_i in
    every cell, direct tridiagonal elimination, no iteration. The face
    gradients returned are exactly the differences the transport stepper
    consumes, so both modules share one discrete gradient.
    """
    if not np.isfinite(u.values).all():
        raise NumericalError("non-finite density passed to the signal solve")

    grid = u.grid
    n_cells = grid.n_cells
    dr = grid.dr
    M = boundary.M

    # Face conductances A/dr; the origin face never carries flux (zero area
    # for n >= 2, symmetry for n = 1).
    w0 = _conductances(grid)

    diag = -(w0[:-1] + w0[1:]) - grid.volumes * u.values
    diag[-1] -= w0[-1]  # ghost reflection doubles the boundary conductance
    rhs = np.zeros(n_cells)
    rhs[-1] = -2.0 * w0[-1] * M

    # Scale rows to O(1) so the residual tolerance is resolution-independent.
    scale = -1.0 / diag
    ab = np.zeros((3, n_cells))
    ab[0, 1:] = w0[1:-1] * scale[:-1]   # superdiagonal
    ab[1, :] = -1.0
    ab[2, :-1] = w0[1:-1] * scale[1:]   # subdiagonal
    b = rhs * scale
    try:
        v = solve_banded((1, 1), ab, b, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"tridiagonal elimination failed: {exc}") from exc

    residual = -v - b
    residual[:-1] += ab[0, 1:] * v[1:]
    residual[1:] += ab[2, :-1] * v[:-1]
    worst = float(np.abs(residual).max())
    if not worst <= _RESIDUAL_TOL * M:
        raise SingularSystemError(
            f"signal solve residual {worst:.3e} exceeds {_RESIDUAL_TOL * M:.3e}"
        )

    vr = np.empty(n_cells + 1)
    vr[0] = 0.0
    vr[1:-1] = (v[1:] - v[:-1]) / dr
    vr[-1] = 2.0 * (M - v[-1]) / dr
    return EllipticSolution(v=RadialProfile(grid, v), vr_faces=vr, boundary_flux=float(vr[-1]))


def vr_from_integral(u: RadialProfile, v: RadialProfile) -> np.ndarray:
    """Face gradients of v from the cumulative integral representation.

    d_r(r^{n-1} v_r) = r^{n-1} u v integrates to
    v_r(r) = r^{1-n} * int_0^r rho^{n-1} u v d(rho); evaluated by cumulative
    midpoint quadrature over cells. Independent of the tridiagonal solve, so
    it serves as a cross-check of the primal gradient, never as its source.

    For n <= 2 the midpoint weight r_i^{n-1} dr equals the exact cell volume
    over omega, so this reproduces the scheme's telescoped gradient to
    round-off; the O(dr^2) quadrature gap only opens up for n >= 3.
    """
    require_same_grid(u, v)
    grid = u.grid
    exponent = grid.geometry.n - 1
    integrand = grid.center_radii ** exponent * u.values * v.values
    cumulative = np.cumsum(integrand) * grid.dr
    out = np.empty(grid.n_cells + 1)
    out[0] = 0.0
    out[1:] = cumulative / grid.face_radii[1:] ** exponent
    return out


def boundary_flux_bound(u0_mass: float, geometry: Geometry) -> float:
    """Mass-only bound on the outward signal gradient at r = R.

    Returns R^(1-n) * u0_mass / (n |B_1|), the constant the boundary flux is
    checked against along trajectories (valid as stated for M <= 1; the
    general bound carries an extra factor M).
    """
    if not u0_mass >= 0.0:
        raise DomainError(f"mass must be >= 0, got {u0_mass!r}")
    n = geometry.n
    return geometry.R ** (1 - n) * u0_mass / (n * unit_ball_volume(n))
