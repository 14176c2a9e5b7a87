import math

import numpy as np
import pytest
import sympy as sp

from delaydisp.model import HistorySpec, ModelParams
from delaydisp.integrator import integrate
from delaydisp.model import DampingProfile
from delaydisp.verify import (
    TIME_STEPS,
    ManufacturedCase,
    clamped_beta1,
    clamped_eigen_reference,
    dense_cross_check,
    dirichlet_eigen_check,
    mms_convergence,
    run_all,
)

# First positive root of cos(b) cosh(b) = 1, mpmath findroot at 30 digits.
BETA1_REF = 4.73004074486270402602404810083


def _symbolic_forcing(case: ManufacturedCase):
    x, t = sp.symbols("x t", real=True)
    p = case.params
    ell = sp.nsimplify(p.ell)
    u = case.amplitude * sp.exp(-t) * x**2 * (ell - x) ** 2
    a = case.profile(0.5)  # constant profile
    f = (sp.diff(u, t) - p.nu * sp.diff(u, x, 2) + p.mu * sp.diff(u, x, 4)
         + u.subs(t, t - p.tau) * sp.diff(u, x) + a * u)
    return sp.lambdify((x, t), f, "numpy")


class TestManufactured:
    @pytest.mark.parametrize("case", [
        ManufacturedCase(),
        ManufacturedCase(ModelParams(0.02, 0.003, 0.5, 2.0), DampingProfile.constant(-0.7), 1.7),
    ])
    def test_forcing_matches_symbolic(self, case):
        f = _symbolic_forcing(case)
        rng = np.random.default_rng(7)
        x = rng.uniform(0, case.params.ell, 1000)
        t = rng.uniform(0, 3, 1000)
        got = np.array([case.forcing(xi, ti) for xi, ti in zip(x, t)])
        np.testing.assert_allclose(got, f(x, t), rtol=1e-12, atol=1e-14)

    def test_history_matches_solution(self):
        case = ManufacturedCase()
        x = np.linspace(0, 1, 11)
        for s in (-0.2, -0.1, 0.0):
            np.testing.assert_allclose(case.history()(x, s), case.u_star(x, s), atol=1e-16)

    def test_zero_everything_is_exact(self):
        traj = integrate(ModelParams(0.01, 0.001, 0.2), DampingProfile.constant(1.0), HistorySpec.zero(),
                         31, 0.01, 0.5)
        assert np.max(np.abs(traj.final_state)) == 0.0


class TestConvergence:
    def test_space_order(self):
        st = mms_convergence(ManufacturedCase(), grid_sizes=(15, 31, 63), T=0.5)["space"]
        assert st.within(2.0, 0.3)

    @pytest.mark.parametrize("order", [1, 2])
    def test_time_order(self, order):
        st = mms_convergence(ManufacturedCase(), dt_values=TIME_STEPS, bdf_order=order)["time"]
        assert st.within(float(order), 0.3)
        assert "order" in st.table()

    def test_needs_three_levels(self):
        with pytest.raises(ValueError):
            mms_convergence(ManufacturedCase(), grid_sizes=(15, 31))


class TestDense:
    def test_random_step(self):
        assert dense_cross_check(32) < 1e-12

    def test_tiny_dt(self):
        assert dense_cross_check(32, dt=1e-6) < 1e-12

    def test_zero_rhs(self):
        assert dense_cross_check(32, zero_rhs=True) == 0.0


class TestEigen:
    def test_beta1(self):
        assert clamped_beta1() == pytest.approx(BETA1_REF, rel=1e-14)

    def test_ratio(self):
        ref = clamped_eigen_reference()
        assert ref["reference"] == pytest.approx(BETA1_REF**4, rel=1e-13)
        assert ref["ratios"][1] == pytest.approx(4.0, abs=0.5)
        assert all(e1 > e2 for e1, e2 in zip(ref["errors"], ref["errors"][1:]))

    def test_dirichlet(self):
        assert dirichlet_eigen_check() < 1e-12

    def test_run_all_passes(self):
        rows = run_all()
        assert len(rows) == 6
        assert all(ok for _, _, ok in rows), rows
