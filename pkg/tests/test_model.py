import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaydisp.discretization import SpatialGrid
from delaydisp.errors import ConfigurationError, CoverageError
from delaydisp.model import (
    DampingProfile,
    HistorySpec,
    ModelParams,
    sample_history,
    sample_profile,
    validate_damping,
)


class TestModelParams:
    def test_defaults(self):
        p = ModelParams(0.01, 0.001)
        assert p.tau == 0.0 and p.ell == 1.0

    @pytest.mark.parametrize("kwargs", [
        dict(nu=-0.1, mu=0.001),
        dict(nu=0.01, mu=0.0),
        dict(nu=0.01, mu=0.001, tau=-1.0),
        dict(nu=0.01, mu=0.001, ell=0.0),
        dict(nu=math.nan, mu=0.001),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            ModelParams(**kwargs)

    def test_replace_revalidates(self):
        p = ModelParams(0.01, 0.001)
        assert p.replace(tau=0.5).tau == 0.5
        with pytest.raises(ConfigurationError):
            p.replace(mu=-1.0)


class TestValidateDamping:
    def test_unit_constant(self):
        rep = validate_damping(DampingProfile.constant(1.0))
        assert rep.all_hold
        assert rep.a0 == 1.0 and rep.sup_norm == 1.0

    def test_zero_profile_fails_positivity_only(self):
        rep = validate_damping(DampingProfile.constant(0.0))
        assert not rep.positive_above_a0
        assert rep.concave_second_derivative and rep.nonneg_fourth_derivative

    def test_combined_profile_not_concave(self):
        prof = DampingProfile.combined(1.0, 2.0, 1.0, 2.0)
        rep = validate_damping(prof)
        assert not rep.concave_second_derivative
        # a'' = -4 pi^2 sin(2 pi x) changes sign on a 10^4-point scan
        x = np.linspace(0.0, 1.0, 10_001)
        d2 = prof.second_derivative(x)
        np.testing.assert_allclose(d2, -4 * math.pi**2 * np.sin(2 * math.pi * x), atol=1e-9)
        assert d2.max() > 0 > d2.min()

    def test_half_wave_sine_satisfies_all(self):
        rep = validate_damping(DampingProfile.sinusoidal(1.0, 1.0, 1.0))
        assert rep.all_hold
        assert rep.a0 == pytest.approx(1.0)
        assert rep.sup_norm == pytest.approx(2.0)

    def test_affine_extrema(self):
        rep = validate_damping(DampingProfile.affine(1.0, 1.0))
        assert rep.a0 == pytest.approx(1.0)
        assert rep.sup_norm == pytest.approx(2.0)
        assert rep.all_hold

    def test_negative_constant(self):
        rep = validate_damping(DampingProfile.constant(-2.0))
        assert rep.sup_norm == 2.0
        assert not rep.positive_above_a0

    def test_tabulated_matches_analytic(self):
        x = np.linspace(0.0, 1.0, 201)
        tab = DampingProfile.tabulated(1.0 + np.sin(math.pi * x))
        rep = validate_damping(tab)
        assert rep.all_hold
        assert rep.sup_norm == pytest.approx(2.0, abs=1e-12)

    def test_tabulated_needs_samples(self):
        with pytest.raises(ConfigurationError):
            DampingProfile.tabulated([1.0, 1.0, 1.0])

    @settings(max_examples=50, deadline=None)
    @given(b0=st.floats(-3, 3), c1=st.floats(-3, 3), c2=st.floats(-3, 3),
           k=st.sampled_from([1.0, 2.0, 3.0]))
    def test_a0_is_grid_minimum(self, b0, c1, c2, k):
        prof = DampingProfile.combined(b0, c1, c2, k)
        x = np.linspace(0.0, 1.0, 20_001)
        vals = prof(x)
        assert prof.a0 <= vals.min() + 1e-12
        assert prof.a0 >= vals.min() - 1e-6
        assert prof.sup_norm == pytest.approx(np.abs(vals).max(), abs=1e-6)


class TestSampleProfile:
    def test_constant(self):
        g = SpatialGrid(37, 1.0)
        np.testing.assert_array_equal(sample_profile(DampingProfile.constant(1.0), g), np.ones(37))

    def test_affine_midpoint(self):
        g = SpatialGrid(99, 1.0)
        vals = sample_profile(DampingProfile.affine(1.0, 1.0), g)
        assert vals[49] == pytest.approx(1.5, abs=1e-15)

    def test_sinusoidal_midpoint(self):
        g = SpatialGrid(99, 1.0)
        vals = sample_profile(DampingProfile.sinusoidal(1.0, 1.0, 1.0), g)
        assert vals[49] == pytest.approx(2.0, abs=1e-15)


class TestHistory:
    def test_sin_at_past_time(self):
        g = SpatialGrid(49, 1.0)
        v = sample_history(HistorySpec.constant_profile("sin"), g, -0.3, 1.0)
        np.testing.assert_allclose(v, np.sin(math.pi * g.nodes), rtol=0, atol=1e-15)

    def test_zero(self):
        g = SpatialGrid(49, 1.0)
        v = sample_history(HistorySpec.zero(), g, -0.5, 1.0)
        assert not v.any()

    def test_separable_bump(self):
        g = SpatialGrid(49, 1.0)
        spec = HistorySpec("separable", "bump", (), "exp", (1.0,))
        x = g.nodes
        np.testing.assert_allclose(sample_history(spec, g, 0.0, 1.0), x**2 * (1 - x) ** 2, atol=1e-16)
        np.testing.assert_allclose(sample_history(spec, g, -0.5, 1.0),
                                   math.exp(-0.5) * x**2 * (1 - x) ** 2, rtol=1e-14)

    @pytest.mark.parametrize("s", [0.1, -1.01])
    def test_out_of_range(self, s):
        with pytest.raises(CoverageError):
            sample_history(HistorySpec.constant_profile("sin"), SpatialGrid(9, 1.0), s, 1.0)

    def test_tabulated_interpolates_in_time(self):
        xs = np.linspace(0.0, 1.0, 11)
        spec = HistorySpec("tabulated", s_nodes=(-1.0, 0.0), table=(0 * xs, 2 * xs))
        np.testing.assert_allclose(spec(np.array([0.5]), -0.25), [0.75])

    def test_tabulated_shape_checked(self):
        with pytest.raises(ConfigurationError):
            HistorySpec("tabulated", s_nodes=(-1.0, -0.5), table=((0.0, 1.0), (0.0, 1.0)))

    def test_clamped_consistency(self):
        assert HistorySpec("constant", "bump", ()).is_clamped_consistent()
        assert not HistorySpec.constant_profile("sin").is_clamped_consistent()

    def test_unknown_shape(self):
        with pytest.raises(ConfigurationError):
            HistorySpec("constant", "gauss")
