import math

import numpy as np
import pytest

from optomech.config import PRESETS
from optomech.diagnostics import DiagnosticsOptions
from optomech.integrate import IntegratorConfig
from optomech.model import ModelParams, ParameterError
from optomech.sweep import Axis, SweepSpec, evaluate_cell, mean_section_x, run_sweep

FAST = DiagnosticsOptions(n_transient=30, n_points=400)


class TestAxis:
    def test_values_inclusive(self):
        assert Axis("eps", 0.0, 1.0, 5).values() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_single_node(self):
        assert Axis("g3", 2.5, 2.5, 1).values() == [2.5]
        with pytest.raises(ParameterError):
            Axis("g3", 0.0, 1.0, 1)

    def test_unknown_name(self):
        with pytest.raises(ParameterError) as exc:
            Axis("speed", 0, 1, 2)
        assert exc.value.field == "axis.name"

    def test_invalid_node_rejected_up_front(self):
        # eps_m > eps at the upper node
        with pytest.raises(ParameterError):
            SweepSpec(Axis("eps_m", 0.0, 10.0, 3), ModelParams(eps=5.0))


class TestCellParams:
    def test_ratio_applied_after_plain_fields(self):
        base = ModelParams(kappa=50.0)
        spec = SweepSpec(Axis("eps_kappa_ratio", 3.0, 3.0, 1), base, metric="well-topology",
                         axis_b=Axis("kappa", 20.0, 20.0, 1))
        assert spec.cell_params(3.0, 20.0).eps == 60.0

    def test_modulation_ratio_tracks_eps(self):
        spec = SweepSpec(Axis("eps_m_ratio", 0.5, 0.5, 1), PRESETS["fig5"].model())
        p = spec.cell_params(0.5)
        assert p.eps_m == 0.5 * p.eps == 125.0


class TestRunSweep:
    def test_zero_drive_single_well(self):
        spec = SweepSpec(Axis("eps", 0.0, 0.0, 1), PRESETS["fig1c"].model(), metric="well-topology")
        res = run_sweep(spec)
        assert list(res.rows()) == [(0.0, None, "single-well", "ok")]

    def test_grid_integrity_row_major(self):
        spec = SweepSpec(Axis("eps", 0.0, 250.0, 3), PRESETS["fig1c"].model(), metric="well-topology",
                         axis_b=Axis("g3", -0.00025, 0.00025, 2))
        rows = list(run_sweep(spec).rows())
        assert len(rows) == 6
        assert [(a, b) for a, b, _, _ in rows] == [(a, b) for a in (0.0, 125.0, 250.0) for b in (-0.00025, 0.00025)]
        assert all(s == "ok" for *_, s in rows)
        assert rows[0][2] == "single-well"

    def test_failed_cell_does_not_abort(self):
        cfg = IntegratorConfig(fixed_step=50.0, max_step=50.0)
        spec = SweepSpec(Axis("gamma", 0.0, 0.1, 2), ModelParams(omega_drive=0.05),
                         options=DiagnosticsOptions(n_transient=1, n_points=20), integrator=cfg)
        res = run_sweep(spec)
        assert list(res.status[:, 0]) == ["failed", "failed"]
        assert res.values[0, 0] is None

    def test_cell_independence_and_parallel(self):
        base = PRESETS["fig4"].model()
        opts = DiagnosticsOptions(n_transient=5, n_points=60)
        spec = SweepSpec(Axis("eps_m_ratio", 0.2, 0.5, 3), base, options=opts)
        serial = run_sweep(spec)
        parallel = run_sweep(SweepSpec(spec.axis_a, base, options=opts, workers=2))
        assert list(serial.rows()) == list(parallel.rows())
        alone = evaluate_cell("lambda_max", spec.cell_params(0.35), spec.initial, opts, spec.integrator)
        assert alone == serial.values[1, 0]

    def test_modulation_line_endpoints(self):
        spec = SweepSpec(Axis("eps_m_ratio", 0.2, 0.5, 11), PRESETS["fig5"].model(), options=FAST, workers=4)
        lam = run_sweep(spec).values[:, 0]
        assert abs(lam[0]) < 0.005
        assert lam[-1] > 0.01

    @pytest.mark.slow
    def test_both_signs_chaotic_at_strong_modulation(self):
        base = PRESETS["fig6-pos"].model()
        spec = SweepSpec(Axis("g3", -0.00025, 0.00025, 2), base, metric="regime",
                         axis_b=Axis("eps_m_ratio", 0.5001, 0.5001, 1), workers=2)
        assert list(run_sweep(spec).values[:, 0]) == ["chaotic", "chaotic"]


class TestMeanSectionX:
    def test_harmonic_centered(self):
        p = ModelParams(omega_drive=math.sqrt(2.0))
        assert abs(mean_section_x(p, DiagnosticsOptions(n_transient=0, n_points=1000), (1.0, 0.0))) < 0.01

    def test_fig6_signs(self):
        pos = mean_section_x(PRESETS["fig6-pos"].model(), FAST)
        neg = mean_section_x(PRESETS["fig6-neg"].model(), FAST)
        assert pos > 0 > neg
