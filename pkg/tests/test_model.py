import numpy as np
import pytest

from stefan_etc.controller import ControllerGains
from stefan_etc.errors import EmptyTraceError
from stefan_etc.model import (InitialCondition, MATERIAL_PRESETS, PlantParams,
                              Setpoint, StefanState, energy_balance_defect,
                              flat_profile, initial_state, linear_profile,
                              sigma, trapezoid_uniform, validate_config)

NONDIM = PlantParams(alpha=1.0, beta=1.0, k=1.0, L=0.35, T_m=0.0)
GAINS = ControllerGains(c1=3.2e-3, c2=5e-3, delta1=10.0, delta2=0.3)


def make_state(s, theta, qc=0.0, t=0.0):
    return StefanState(t=t, s=s, qc=qc, theta=np.asarray(theta, dtype=float))


class TestSigma:
    def test_equilibrium_is_exactly_zero(self):
        for n in (8, 50, 333):
            state = make_state(0.3, flat_profile(0.0, n))
            assert sigma(state, NONDIM, Setpoint(0.3)) == 0.0

    def test_linear_profile_nondimensional_value(self):
        # linear superheat from 1 to 0 over [0, 0.05], setpoint 0.30:
        # integral term 0.025, interface term -0.25, so sigma = 0.225;
        # the trapezoid rule is exact on a linear profile
        state = make_state(0.05, linear_profile(0.0, 1.0, 200))
        assert sigma(state, NONDIM, Setpoint(0.30)) == pytest.approx(0.225, rel=1e-13)

    def test_flat_profile_reduces_to_interface_term(self):
        state = make_state(0.1, flat_profile(0.0, 64))
        val = sigma(state, NONDIM, Setpoint(0.30))
        assert val == pytest.approx(0.2, rel=1e-13)
        assert val > 0

    def test_uniform_temperature_shift_is_affine(self):
        rng = np.random.default_rng(7)
        theta = np.abs(rng.normal(size=80))
        theta[-1] = 0.0
        state = make_state(0.2, theta)
        shifted = make_state(0.2, theta + 0.75)
        sp = Setpoint(0.3)
        base = sigma(state, NONDIM, sp)
        moved = sigma(shifted, NONDIM, sp)
        expected = base - (NONDIM.k / NONDIM.alpha) * 0.2 * 0.75
        assert moved == pytest.approx(expected, rel=1e-12)

    def test_grid_independence_for_linear_data(self):
        sp = Setpoint(0.30)
        vals = [sigma(make_state(0.05, linear_profile(0.0, 1.0, n)), NONDIM, sp)
                for n in (8, 100, 400)]
        assert np.allclose(vals, 0.225, rtol=1e-13)


class TestValidateConfig:
    def zinc_parts(self):
        params = PlantParams(**MATERIAL_PRESETS["zinc"])
        ic = InitialCondition(s0=0.05, T0=linear_profile(params.T_m, 1.0, 200),
                              qc0=0.0)
        return params, ic, Setpoint(0.30)

    def test_zinc_scenario_is_valid(self):
        params, ic, sp = self.zinc_parts()
        assert validate_config(params, ic, sp, GAINS) == []

    def test_interface_at_domain_edge_rejected(self):
        params, ic, sp = self.zinc_parts()
        bad = InitialCondition(s0=params.L, T0=ic.T0, qc0=0.0)
        names = [v.name for v in validate_config(params, bad, sp, GAINS)]
        assert "Assumption 1" in names

    def test_subcooled_profile_rejected(self):
        params, ic, sp = self.zinc_parts()
        t0 = ic.T0.copy()
        t0[10] = params.T_m - 1.0
        names = [v.name for v in validate_config(
            params, InitialCondition(0.05, t0, 0.0), sp, GAINS)]
        assert "Assumption 1" in names

    def test_interface_sample_must_sit_at_melting(self):
        params, ic, sp = self.zinc_parts()
        t0 = ic.T0.copy()
        t0[-1] = params.T_m + 0.5
        names = [v.name for v in validate_config(
            params, InitialCondition(0.05, t0, 0.0), sp, GAINS)]
        assert "Assumption 1" in names

    def test_negative_initial_flux_rejected(self):
        params, ic, sp = self.zinc_parts()
        bad = InitialCondition(s0=0.05, T0=ic.T0, qc0=-1.0)
        names = [v.name for v in validate_config(params, bad, sp, GAINS)]
        assert "Assumption 2" in names

    def test_unreachable_setpoint_rejected(self):
        params, ic, sp = self.zinc_parts()
        names = [v.name for v in validate_config(params, ic, Setpoint(0.04), GAINS)]
        assert "Assumption 3" in names

    def test_setpoint_beyond_domain_rejected(self):
        params, ic, sp = self.zinc_parts()
        names = [v.name for v in validate_config(params, ic,
                                                 Setpoint(params.L), GAINS)]
        assert "Assumption 3" in names

    def test_gain_condition_violation(self):
        # qc0 = 1 with sigma(0) = 100 needs c1 >= 0.01; c1 = 0.005 fails.
        params = PlantParams(alpha=1.0, beta=1.0, k=1.0, L=102.0, T_m=0.0)
        ic = InitialCondition(s0=1.0, T0=flat_profile(0.0, 50), qc0=1.0)
        sp = Setpoint(101.0)
        state = initial_state(ic)
        assert sigma(state, params, sp) == pytest.approx(100.0, rel=1e-12)
        gains = ControllerGains(c1=0.005, c2=5e-3, delta1=10.0, delta2=0.3)
        violations = validate_config(params, ic, sp, gains)
        assert [v for v in violations if v.name == "gain condition"]
        ok = ControllerGains(c1=0.02, c2=5e-3, delta1=10.0, delta2=0.3)
        assert validate_config(params, ic, sp, ok) == []

    def test_zero_initial_flux_passes_any_positive_gain(self):
        params, ic, sp = self.zinc_parts()
        tiny = ControllerGains(c1=1e-9, c2=5e-3, delta1=10.0, delta2=0.3)
        assert validate_config(params, ic, sp, tiny) == []

    def test_bad_trigger_slacks_rejected(self):
        params, ic, sp = self.zinc_parts()
        for gains in (ControllerGains(c1=GAINS.c1, c2=GAINS.c2, delta1=-1.0,
                                      delta2=0.3),
                      ControllerGains(c1=GAINS.c1, c2=GAINS.c2, delta1=10.0,
                                      delta2=1.5)):
            names = [v.name for v in validate_config(params, ic, sp, gains)]
            assert "gain positivity" in names


class _FakeTrace:
    def __init__(self, t, qc, sigma_pde):
        self.t = np.asarray(t, dtype=float)
        self.qc = np.asarray(qc, dtype=float)
        self.sigma_pde = np.asarray(sigma_pde, dtype=float)


class TestEnergyBalance:
    def test_single_record_is_zero(self):
        assert energy_balance_defect(_FakeTrace([0.0], [0.3], [5.0])) == 0.0

    def test_constant_sigma_without_flux_is_zero(self):
        t = np.linspace(0.0, 2.0, 9)
        trace = _FakeTrace(t, np.zeros_like(t), np.full_like(t, 1.25))
        assert energy_balance_defect(trace) == 0.0

    def test_linear_flux_integrates_exactly(self):
        # qc piecewise linear: trapezoid time integral is exact, so a
        # sigma history built from the identity has zero defect
        t = np.linspace(0.0, 3.0, 31)
        qc = 2.0 + 0.5 * t
        sigma_hist = 10.0 - (2.0 * t + 0.25 * t ** 2)
        assert energy_balance_defect(_FakeTrace(t, qc, sigma_hist)) < 1e-14

    def test_detects_drift(self):
        t = np.linspace(0.0, 1.0, 11)
        trace = _FakeTrace(t, np.zeros_like(t), 1.0 + 0.1 * t)
        assert energy_balance_defect(trace) == pytest.approx(0.1, rel=1e-12)

    def test_empty_trace_raises(self):
        with pytest.raises(EmptyTraceError):
            energy_balance_defect(_FakeTrace([], [], []))


def test_trapezoid_matches_closed_form():
    x = np.linspace(0.0, 1.0, 101)
    assert trapezoid_uniform(x, x[1] - x[0]) == pytest.approx(0.5, rel=1e-13)
    assert trapezoid_uniform(np.ones(5), 0.25) == pytest.approx(1.0, rel=1e-14)
    assert trapezoid_uniform(np.array([3.0]), 0.1) == 0.0


def test_initial_state_resamples_linearly():
    ic = InitialCondition(s0=0.05, T0=linear_profile(0.0, 1.0, 11), qc0=0.25)
    state = initial_state(ic, 101)
    assert state.theta.shape == (101,)
    assert np.allclose(state.theta, linear_profile(0.0, 1.0, 101), atol=1e-14)
    assert state.qc == 0.25
    assert state.s == 0.05


def test_presets_have_positive_constants():
    for name, preset in MATERIAL_PRESETS.items():
        assert preset["alpha"] > 0 and preset["beta"] > 0 and preset["k"] > 0
        assert preset["L"] > 0
