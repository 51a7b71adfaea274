import math

import numpy as np
import pytest

from radtaxis import (
    BoundaryDatum,
    ConstantData,
    DiffusionLaw,
    EllipticSolution,
    GaussianBump,
    Geometry,
    NumericalError,
    RadialGrid,
    RadialProfile,
    RunConfig,
    SimState,
    StepStatus,
    advance,
    cfl_dt,
    face_flux,
    initial_state,
    integrate,
    solve_v,
    step,
)


def make_config(**overrides):
    fields = dict(
        geometry=Geometry(2, 1.0),
        diffusion=DiffusionLaw(alpha=0.5, kappa=1.0),
        boundary=BoundaryDatum(1.0),
        initial=GaussianBump(mass=2.0, width=0.25, center_radius=0.0),
        cells=64,
        t_end=1e-3,
        cfl_safety=0.6,
        output_stride=1,
    )
    fields.update(overrides)
    return RunConfig(**fields)


def drain_state(cells=16, level=1.0, vr_value=0.5):
    """n=1 state with uniform density and a handmade constant drift field.

    Fluxes are then known in closed form: every interior face carries
    -2 * level * vr_value, so only the first and last cells change.
    """
    grid = RadialGrid(Geometry(1, 1.0), cells)
    u = RadialProfile(grid, np.full(cells, level))
    vr = np.zeros(cells + 1)
    vr[1:-1] = vr_value
    elliptic = EllipticSolution(
        v=solve_v(u, BoundaryDatum(1.0)).v, vr_faces=vr, boundary_flux=0.0
    )
    return SimState(
        t=0.0, dt=0.0, step_index=0, u=u, elliptic=elliptic,
        initial_mass=integrate(u), min_u_watermark=0.0,
    )


class TestFaceFlux:
    def test_zero_density_zero_flux(self):
        config = make_config()
        grid = RadialGrid(config.geometry, config.cells)
        u = RadialProfile(grid, np.zeros(config.cells))
        solution = solve_v(u, config.boundary)
        assert np.all(face_flux(u, solution.vr_faces, config.diffusion) == 0.0)

    def test_constant_density_pure_drift(self):
        # no gradient: the diffusive part vanishes and the flux is -A c vr <= 0
        config = make_config()
        grid = RadialGrid(config.geometry, config.cells)
        c = 3.0
        u = RadialProfile(grid, np.full(config.cells, c))
        solution = solve_v(u, config.boundary)
        flux = face_flux(u, solution.vr_faces, config.diffusion)
        expected = -grid.face_areas[1:-1] * c * solution.vr_faces[1:-1]
        assert flux[1:-1] == pytest.approx(expected, rel=1e-13)
        assert np.all(flux <= 0.0)

    def test_boundary_faces_identically_zero(self):
        config = make_config()
        grid = RadialGrid(config.geometry, config.cells)
        rng = np.random.default_rng(5)
        for _ in range(20):
            u = RadialProfile(grid, rng.uniform(0.0, 10.0, config.cells))
            solution = solve_v(u, config.boundary)
            flux = face_flux(u, solution.vr_faces, config.diffusion)
            assert flux[0] == 0.0
            assert flux[-1] == 0.0

    def test_non_finite_rejected(self):
        config = make_config()
        grid = RadialGrid(config.geometry, config.cells)
        u = RadialProfile(grid, np.ones(config.cells))
        vr = np.zeros(config.cells + 1)
        vr[3] = math.inf
        with pytest.raises(NumericalError):
            face_flux(u, vr, config.diffusion)


class TestCflDt:
    def test_zero_state_diffusive_bound(self):
        config = make_config(diffusion=DiffusionLaw(alpha=0.0, kappa=1.0))
        grid = RadialGrid(config.geometry, config.cells)
        u = RadialProfile(grid, np.zeros(config.cells))
        vr = np.zeros(config.cells + 1)
        assert cfl_dt(u, vr, config.diffusion, 0.6) == pytest.approx(0.6 * grid.dr ** 2 / 2.0)

    def test_larger_alpha_allows_larger_dt_at_high_density(self):
        grid = RadialGrid(Geometry(2, 1.0), 64)
        u = RadialProfile(grid, np.full(64, 50.0))
        vr = np.zeros(65)
        dt_small_alpha = cfl_dt(u, vr, DiffusionLaw(alpha=0.2, kappa=1.0), 1.0)
        dt_large_alpha = cfl_dt(u, vr, DiffusionLaw(alpha=1.5, kappa=1.0), 1.0)
        assert dt_large_alpha > dt_small_alpha

    def test_halving_dr_quarters_diffusive_bound(self):
        law = DiffusionLaw(alpha=0.0, kappa=2.0)
        dts = []
        for cells in (32, 64):
            grid = RadialGrid(Geometry(2, 1.0), cells)
            u = RadialProfile(grid, np.ones(cells))
            dts.append(cfl_dt(u, np.zeros(cells + 1), law, 1.0))
        assert dts[0] / dts[1] == pytest.approx(4.0)

    def test_advective_bound_engages(self):
        grid = RadialGrid(Geometry(2, 1.0), 64)
        u = RadialProfile(grid, np.zeros(64))
        vr = np.full(65, 100.0)
        law = DiffusionLaw(alpha=0.0, kappa=1e-9)
        assert cfl_dt(u, vr, law, 1.0) == pytest.approx(grid.dr / 100.0)


class TestStep:
    def test_zero_is_fixed_point(self):
        config = make_config(initial=ConstantData(0.0))
        state = initial_state(config)
        for _ in range(50):
            dt = cfl_dt(state.u, state.elliptic.vr_faces, config.diffusion, config.cfl_safety)
            outcome = step(state, config, dt)
            assert outcome.status is StepStatus.ADVANCED
            state = outcome.state
            assert np.all(state.u.values == 0.0)
            assert np.max(np.abs(state.elliptic.v.values - 1.0)) <= 1e-12

    def test_mass_conserved_per_step(self):
        config = make_config()
        state = initial_state(config)
        mass0 = state.initial_mass
        peak = float(np.max(state.u.values))
        for _ in range(200):
            dt = cfl_dt(state.u, state.elliptic.vr_faces, config.diffusion, config.cfl_safety)
            state = step(state, config, dt).state
            assert integrate(state.u) == pytest.approx(mass0, rel=1e-13)
            peak = max(peak, float(np.max(state.u.values)))
            assert np.min(state.u.values) >= 0.0
        # undershoots never exceeded round-off scale before clipping
        assert state.min_u_watermark >= -1e-13 * peak

    def test_round_off_negative_is_clipped_conservatively(self):
        # drain the first cell just past zero: within clip tolerance
        state = drain_state()
        dr = state.u.grid.dr
        dt = (dr / 0.5) * (1.0 + 3e-14)
        config = make_config(cells=16, geometry=Geometry(1, 1.0))
        outcome = step(state, config, dt)
        assert outcome.status is StepStatus.ADVANCED
        new = outcome.state
        assert float(np.min(new.u.values)) == 0.0
        assert new.min_u_watermark < 0.0
        assert integrate(new.u) == pytest.approx(state.initial_mass, rel=1e-13)

    def test_undershoot_triggers_dt_halving(self):
        state = drain_state()
        dr = state.u.grid.dr
        dt = (dr / 0.5) * 1.5  # drains 1.5x the first cell's content
        config = make_config(cells=16, geometry=Geometry(1, 1.0))
        outcome = step(state, config, dt)
        assert outcome.status is StepStatus.ADVANCED
        assert outcome.state.dt == pytest.approx(dt / 2.0)
        assert outcome.state.t == pytest.approx(dt / 2.0)
        assert np.min(outcome.state.u.values) >= 0.0

    def test_persistent_undershoot_fails(self):
        state = drain_state()
        dr = state.u.grid.dr
        dt = (dr / 0.5) * 4.0  # halving still drains 2x the cell content
        config = make_config(cells=16, geometry=Geometry(1, 1.0))
        outcome = step(state, config, dt)
        assert outcome.status is StepStatus.NUMERICAL_FAILURE
        assert outcome.state is None
        assert outcome.measurement < 0.0

    def test_threshold_exceeded(self):
        config = make_config(u_max_threshold=1e-3)
        state = initial_state(config)
        dt = cfl_dt(state.u, state.elliptic.vr_faces, config.diffusion, config.cfl_safety)
        outcome = step(state, config, dt)
        assert outcome.status is StepStatus.THRESHOLD_EXCEEDED
        assert outcome.measurement > 1e-3
        assert outcome.state is None

    def test_dt_underflow(self):
        config = make_config(dt_min=1.0)
        state = initial_state(config)
        outcome = step(state, config, 1e-6)
        assert outcome.status is StepStatus.DT_UNDERFLOW
        assert outcome.measurement == pytest.approx(1e-6)


class TestResolveLimits:
    def test_defaults_follow_initial_state(self):
        from radtaxis.stepper import resolve_limits

        config = make_config()
        state = initial_state(config)
        dt0 = cfl_dt(state.u, state.elliptic.vr_faces, config.diffusion, config.cfl_safety)
        resolved = resolve_limits(config, state, dt0)
        linf0 = float(np.max(state.u.values))
        assert resolved.u_max_threshold == pytest.approx(1e6 * linf0)
        assert resolved.dt_min == pytest.approx(1e-12 * dt0)

    def test_zero_data_threshold_unbounded(self):
        from radtaxis.stepper import resolve_limits

        config = make_config(initial=ConstantData(0.0))
        state = initial_state(config)
        resolved = resolve_limits(config, state, 1e-5)
        assert resolved.u_max_threshold == math.inf

    def test_explicit_values_kept(self):
        from radtaxis.stepper import resolve_limits

        config = make_config(u_max_threshold=7.0, dt_min=1e-9)
        state = initial_state(config)
        resolved = resolve_limits(config, state, 1e-5)
        assert resolved.u_max_threshold == 7.0
        assert resolved.dt_min == 1e-9


class TestAdvance:
    def test_zero_horizon_returns_initial_state(self):
        config = make_config(t_end=0.0)
        records = []
        outcome, final = advance(initial_state(config), config,
                                 lambda rec, st: records.append(rec))
        assert outcome.status is StepStatus.ADVANCED
        assert final.step_index == 0
        assert final.t == 0.0
        assert len(records) == 1

    def test_zero_data_reaches_horizon(self):
        config = make_config(initial=ConstantData(0.0), t_end=0.05, cells=32)
        outcome, final = advance(initial_state(config), config)
        assert outcome.status is StepStatus.ADVANCED
        assert final.t >= config.t_end
        assert np.all(final.u.values == 0.0)

    def test_recorder_cadence(self):
        config = make_config(output_stride=7, t_end=5e-4, cells=32)
        records = []
        outcome, final = advance(initial_state(config), config,
                                 lambda rec, st: records.append((rec, st.step_index)))
        steps = [idx for _, idx in records]
        assert steps[0] == 0
        assert steps[-1] == final.step_index
        for idx in steps[1:-1]:
            assert idx % 7 == 0
        assert len(set(steps)) == len(steps)

    def test_bit_identical_repeat(self):
        config = make_config(t_end=2e-3)
        runs = []
        for _ in range(2):
            records = []
            advance(initial_state(config), config, lambda rec, st: records.append(rec))
            runs.append(records)
        assert runs[0] == runs[1]

    def test_threshold_termination_reports_measurement(self):
        config = make_config(u_max_threshold=8.0, t_end=1.0)
        outcome, final = advance(initial_state(config), config)
        # the Gaussian peak is above 8 immediately after the first update check
        assert outcome.status in (StepStatus.THRESHOLD_EXCEEDED, StepStatus.ADVANCED)
        if outcome.status is StepStatus.THRESHOLD_EXCEEDED:
            assert outcome.measurement > 8.0


class TestDiffusionControl:
    def test_pure_diffusion_relaxes_to_mean(self):
        # drift artificially zeroed: the update is a discrete heat flow, so
        # the L2 distance to the conserved mean must decay monotonically
        grid = RadialGrid(Geometry(2, 1.0), 32)
        law = DiffusionLaw(alpha=0.0, kappa=1.0)
        values = 4.0 * np.exp(-((grid.center_radii / 0.3) ** 2))
        u = RadialProfile(grid, values)
        vr = np.zeros(grid.n_cells + 1)
        mean = integrate(u) / grid.geometry.domain_volume
        dt = 0.4 * grid.dr ** 2 / (2.0 * law.eval(0.0))
        distances = []
        for _ in range(3000):
            dist = float(np.sqrt(np.dot(grid.volumes, (u.values - mean) ** 2)))
            distances.append(dist)
            flux = face_flux(u, vr, law)
            u = RadialProfile(grid, u.values + (dt / grid.volumes) * (flux[1:] - flux[:-1]))
        distances = np.array(distances)
        assert np.all(np.diff(distances) <= 1e-14)
        assert distances[-1] < 0.2 * distances[0]


def test_grid_convergence_subcritical_case():
    # first-order upwinding limits the observed order to ~1
    results = []
    for cells in (32, 64, 128):
        config = make_config(cells=cells, t_end=5e-3, cfl_safety=0.5)
        outcome, final = advance(initial_state(config), config)
        assert outcome.status is StepStatus.ADVANCED
        results.append(float(np.max(final.u.values)))
    order = math.log2(abs(results[0] - results[1]) / abs(results[1] - results[2]))
    assert order >= 1.0
