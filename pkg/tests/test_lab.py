import math

import numpy as np
import pytest

from radtaxis import (
    BLOWUP_SUSPECTED,
    BOUNDED,
    TOLERANCE_FAILURE,
    BoundaryDatum,
    ConfigError,
    ConstantData,
    DiffusionLaw,
    GaussianBump,
    Geometry,
    RadialProfile,
    RunConfig,
    SimState,
    StepStatus,
    SweepPlan,
    SweepVariant,
    face_flux,
    initial_state,
    paired_separation,
    run_case,
    run_sweep,
    solve_v,
    verify_suite,
)
from radtaxis.lab import (
    OnlineChecker,
    case_config,
    parse_plan,
    report_lines,
    sweep_csv_lines,
    trace_csv_lines,
)
from radtaxis.stepper import make_record


def make_config(**overrides):
    fields = dict(
        geometry=Geometry(2, 1.0),
        diffusion=DiffusionLaw(alpha=0.5, kappa=1.0),
        boundary=BoundaryDatum(1.0),
        initial=GaussianBump(mass=2.0, width=0.25, center_radius=0.0),
        cells=64,
        t_end=2e-3,
        cfl_safety=0.6,
        output_stride=5,
        lp_exponents=(2.0,),
    )
    fields.update(overrides)
    return RunConfig(**fields)


class TestRunCase:
    def test_zero_data_bounded_with_zero_peak(self):
        report = run_case(make_config(initial=ConstantData(0.0), t_end=0.01, cells=32))
        assert report.verdict.kind == BOUNDED
        assert report.peak_linf == 0.0
        assert report.terminal_status is StepStatus.ADVANCED
        assert all(check.passed for check in report.checks)

    def test_threshold_case_is_blowup_suspected(self):
        report = run_case(make_config(u_max_threshold=8.0, t_end=1.0))
        assert report.verdict.kind == BLOWUP_SUSPECTED
        assert report.verdict.detail == "threshold_exceeded"
        assert report.peak_linf > 8.0

    def test_records_certify_checks(self):
        report = run_case(make_config())
        assert len(report.records) >= 2
        names = [c.name for c in report.checks]
        assert names == ["mass_conservation", "signal_bounds", "boundary_flux_bound", "positivity"]
        assert all(c.passed for c in report.checks)

    def test_zero_horizon(self):
        report = run_case(make_config(t_end=0.0))
        assert report.steps == 0
        assert report.verdict.kind == BOUNDED
        assert len(report.records) == 1


class TestOnlineChecker:
    def test_flags_mass_drift(self):
        config = make_config()
        state = initial_state(config)
        checker = OnlineChecker(config, state)
        record = make_record(state, config)
        assert checker.observe(record, state) is None
        bad = make_record(state, config)
        bad = type(bad)(**{**bad.__dict__, "mass": record.mass * (1 + 1e-9)})
        assert checker.observe(bad, state) == "mass_conservation"

    def test_corrupted_flux_sign_breaks_conservation(self):
        # fault injection: adding instead of subtracting the incoming face
        # flux destroys telescoping, and the mass check must catch it
        config = make_config(cells=32)
        state = initial_state(config)
        checker = OnlineChecker(config, state)
        grid = state.u.grid
        failed = None
        for _ in range(20):
            flux = face_flux(state.u, state.elliptic.vr_faces, config.diffusion)
            dt = 1e-5
            u_bad = state.u.values + (dt / grid.volumes) * (flux[1:] + flux[:-1])
            profile = RadialProfile(grid, np.maximum(u_bad, 0.0))
            state = SimState(
                t=state.t + dt, dt=dt, step_index=state.step_index + 1,
                u=profile, elliptic=solve_v(profile, config.boundary),
                initial_mass=state.initial_mass, min_u_watermark=0.0,
            )
            failed = checker.observe(make_record(state, config), state)
            if failed:
                break
        assert failed == "mass_conservation"


class TestPairedSeparation:
    def test_zero_perturbation_is_bitwise_identity(self):
        ts, ws = paired_separation(make_config(), eps=0.0, steps=100)
        assert np.all(ws == 0.0)

    def test_small_perturbation_grows_at_most_linearly_in_log(self):
        ts, ws = paired_separation(make_config(t_end=1.0), eps=1e-6, steps=400)
        assert len(ts) == 401
        assert np.all(np.isfinite(ws))
        assert np.all(ws > 0.0)
        log_growth = np.log(ws) - math.log(ws[0])
        slope = float(np.polyfit(ts, log_growth, 1)[0])
        assert math.isfinite(slope)
        residual = float(np.max(log_growth - slope * ts))
        assert residual <= 1.0


class TestVerifySuite:
    def test_default_style_config_passes_everything(self):
        config = make_config(cells=128, t_end=1.0, output_stride=1)
        checks = verify_suite(config)
        failed = [c.name for c in checks if not c.passed]
        assert failed == []
        names = {c.name for c in checks}
        assert "signal_oracle_n1_error" in names
        assert "mass_conservation" in names
        assert "trajectory_determinism" in names
        assert "separation_growth" in names

    def test_check_line_format(self):
        config = make_config(cells=64, t_end=1e-3)
        line = verify_suite(config)[0].line()
        parts = line.split()
        assert parts[0] == "CHECK"
        assert parts[2] in ("pass", "fail")
        assert parts[3].startswith("measured=")
        assert parts[4].startswith("tol=")


def small_plan(**overrides):
    fields = dict(
        base=make_config(cells=32, t_end=5e-4, output_stride=10),
        alphas=(0.5, 0.0),
        variants=(
            SweepVariant("bump", GaussianBump(mass=2.0, width=0.25, center_radius=0.0)),
            SweepVariant("flat", ConstantData(0.5)),
        ),
        workers=1,
    )
    fields.update(overrides)
    return SweepPlan(**fields)


class TestSweep:
    def test_plan_sorts_alphas_and_variants(self):
        plan = small_plan()
        assert plan.alphas == (0.0, 0.5)
        assert [v.data_id for v in plan.variants] == ["bump", "flat"]

    def test_single_case_matches_run_case(self):
        plan = small_plan(alphas=(0.5,), variants=(small_plan().variants[0],))
        rows = run_sweep(plan)
        assert len(rows) == 1
        report = run_case(case_config(plan, 0.5, plan.variants[0]))
        row = rows[0]
        assert row.verdict == report.verdict.kind
        assert row.peak_linf == report.peak_linf
        assert row.terminal_t == report.terminal_t
        assert row.steps == report.steps

    def test_rows_sorted_by_alpha_then_id(self):
        rows = run_sweep(small_plan())
        keys = [(row.alpha, row.data_id) for row in rows]
        assert keys == sorted(keys)

    def test_worker_counts_agree_to_the_byte(self):
        tables = []
        for workers in (1, 2):
            rows = run_sweep(small_plan(workers=workers))
            tables.append("\n".join(sweep_csv_lines(rows)))
        assert tables[0] == tables[1]

    def test_wall_ms_column_is_empty_for_reproducibility(self):
        lines = sweep_csv_lines(run_sweep(small_plan(alphas=(0.5,))))
        assert lines[0] == "alpha,data_id,verdict,peak_linf,terminal_t,steps,wall_ms"
        assert all(line.endswith(",") for line in lines[1:])

    def test_crashing_case_becomes_tolerance_failure_row(self):
        # width 1e-300 underflows to a zero profile, so sampling raises inside
        # the worker; the sweep must keep going
        bad = SweepVariant("doomed", GaussianBump(mass=1.0, width=1e-300))
        plan = small_plan(variants=(bad, small_plan().variants[1]), workers=2)
        rows = run_sweep(plan)
        assert len(rows) == 4
        doomed = [r for r in rows if r.data_id == "doomed"]
        assert all(r.verdict == TOLERANCE_FAILURE for r in doomed)
        others = [r for r in rows if r.data_id == "flat"]
        assert all(r.verdict != TOLERANCE_FAILURE for r in others)

    def test_case_config_overrides(self):
        variant = SweepVariant("bump", GaussianBump(mass=1.0, width=0.2), t_end=0.25)
        plan = small_plan(variants=(variant,), t_end=0.5, u_max_threshold=123.0)
        config = case_config(plan, 0.0, variant)
        assert config.t_end == 0.25  # variant override wins over plan override
        assert config.u_max_threshold == 123.0
        assert config.diffusion.alpha == 0.0


class TestPlanParsing:
    def test_round_trip(self, tmp_path):
        from radtaxis.model import config_to_text

        (tmp_path / "base.cfg").write_text(config_to_text(make_config()))
        plan_text = "\n".join([
            "base = base.cfg",
            "alphas = 0.9, 0.1",
            "workers = 3",
            "t_end = 0.125",
            "variant = bump gaussian mass=2 width=0.25 center=0.0",
            "variant = ring annulus mass=1 r_lo=0.2 r_hi=0.6 u_max_threshold=50",
            "variant = level constant mass=3.0",
        ])
        (tmp_path / "sweep.plan").write_text(plan_text)
        plan = parse_plan(tmp_path / "sweep.plan")
        assert plan.alphas == (0.1, 0.9)
        assert plan.workers == 3
        assert plan.t_end == 0.125
        ids = [v.data_id for v in plan.variants]
        assert ids == ["bump", "level", "ring"]
        ring = plan.variants[ids.index("ring")]
        assert ring.u_max_threshold == 50.0
        level = plan.variants[ids.index("level")]
        assert isinstance(level.initial, ConstantData)
        assert level.initial.value == pytest.approx(3.0 / math.pi)

    def test_unknown_plan_key(self, tmp_path):
        from radtaxis.model import config_to_text

        (tmp_path / "base.cfg").write_text(config_to_text(make_config()))
        (tmp_path / "p.plan").write_text("base = base.cfg\nalphas = 1\nvariant = a constant mass=1\nnope = 2\n")
        with pytest.raises(ConfigError, match="nope"):
            parse_plan(tmp_path / "p.plan")

    def test_variant_needs_kind(self, tmp_path):
        from radtaxis.model import config_to_text

        (tmp_path / "base.cfg").write_text(config_to_text(make_config()))
        (tmp_path / "p.plan").write_text("base = base.cfg\nalphas = 1\nvariant = solo\n")
        with pytest.raises(ConfigError):
            parse_plan(tmp_path / "p.plan")

    def test_variant_missing_parameter_named(self, tmp_path):
        from radtaxis.model import config_to_text

        (tmp_path / "base.cfg").write_text(config_to_text(make_config()))
        (tmp_path / "p.plan").write_text(
            "base = base.cfg\nalphas = 1\nvariant = g gaussian mass=1 width=0.2\n"
        )
        with pytest.raises(ConfigError, match="center"):
            parse_plan(tmp_path / "p.plan")

    def test_variant_rejects_foreign_kind_key(self, tmp_path):
        from radtaxis.model import config_to_text

        (tmp_path / "base.cfg").write_text(config_to_text(make_config()))
        (tmp_path / "p.plan").write_text(
            "base = base.cfg\nalphas = 1\nvariant = c constant mass=1 width=0.2\n"
        )
        with pytest.raises(ConfigError, match="width"):
            parse_plan(tmp_path / "p.plan")


class TestPersistence:
    def test_trace_csv_layout(self):
        config = make_config()
        report = run_case(config)
        lines = trace_csv_lines(report.records, config.lp_exponents)
        assert lines[0] == "t,dt,mass,linf,lp_2,u_boundary,dv_dnu,u_min"
        assert len(lines) == len(report.records) + 1
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[2]) == pytest.approx(2.0, rel=1e-12)

    def test_report_contains_verdict_and_checks(self):
        report = run_case(make_config())
        text = "\n".join(report_lines(report))
        assert "verdict = bounded" in text or "verdict = inconclusive" in text
        assert "CHECK mass_conservation pass" in text
        assert "alpha = 0.5" in text
