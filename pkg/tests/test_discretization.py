import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaydisp.discretization import (
    BandedOperator,
    SpatialGrid,
    assemble_d1,
    assemble_d2,
    assemble_d4,
    build_grid,
    build_operators,
    build_quadrature,
    l2_inner,
)
from delaydisp.errors import ConfigurationError
from delaydisp.model import ModelParams


class TestGrid:
    def test_too_small(self):
        with pytest.raises(ConfigurationError):
            SpatialGrid(3, 1.0)

    def test_spacing(self):
        assert SpatialGrid(99, 1.0).h == pytest.approx(0.01, abs=1e-17)

    def test_longer_interval(self):
        g = SpatialGrid(199, 2.0)
        assert g.h == pytest.approx(0.01, abs=1e-17)
        assert g.nodes[0] == pytest.approx(0.01, abs=1e-17)
        assert g.nodes[-1] == pytest.approx(1.99, abs=1e-15)

    def test_build_grid_uses_ell(self):
        assert build_grid(ModelParams(0.01, 0.001, ell=3.0), 29).ell == 3.0


class TestD2:
    def test_exact_on_quadratic(self):
        g = SpatialGrid(50, 1.3)
        x = g.nodes
        np.testing.assert_allclose(assemble_d2(g) @ (x * (g.ell - x)), -2.0, rtol=1e-9)

    def test_zero(self):
        g = SpatialGrid(20, 1.0)
        assert not (assemble_d2(g) @ np.zeros(20)).any()

    def test_second_order_on_sine(self):
        # Richardson refinement: error/h^2 settles to a constant
        consts = []
        for n in (49, 99, 199):
            g = SpatialGrid(n, 1.0)
            x = g.nodes
            err = np.max(np.abs(assemble_d2(g) @ np.sin(math.pi * x) + math.pi**2 * np.sin(math.pi * x)))
            consts.append(err / g.h**2)
        assert consts[2] == pytest.approx(consts[1], rel=0.02)
        assert consts[1] == pytest.approx(consts[0], rel=0.05)

    def test_symmetric(self):
        assert assemble_d2(SpatialGrid(12, 1.0)).is_symmetric()


class TestD4:
    def test_first_row_ghost_elimination(self):
        g = SpatialGrid(10, 1.0)
        dense = assemble_d4(g).to_dense() * g.h**4
        np.testing.assert_allclose(dense[0, :4], [7.0, -4.0, 1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(dense[-1, -4:], [0.0, 1.0, -4.0, 7.0], atol=1e-12)
        np.testing.assert_allclose(dense[4, 2:7], [1.0, -4.0, 6.0, -4.0, 1.0], atol=1e-12)

    def test_exact_on_quartic_interior(self):
        g = SpatialGrid(40, 1.0)
        out = assemble_d4(g) @ g.nodes**4
        np.testing.assert_allclose(out[3:-3], 24.0, rtol=1e-6)

    def test_symmetric_positive(self):
        d4 = assemble_d4(SpatialGrid(30, 1.0))
        assert d4.is_symmetric()
        assert np.linalg.eigvalsh(d4.to_dense()).min() > 0


class TestD1:
    def test_exact_on_quadratic(self):
        g = SpatialGrid(40, 1.0)
        x = g.nodes
        np.testing.assert_allclose((assemble_d1(g) @ (x * (1 - x)))[1:-1], (1 - 2 * x)[1:-1], atol=1e-12)

    def test_zero(self):
        assert not (assemble_d1(SpatialGrid(8, 1.0)) @ np.zeros(8)).any()

    def test_second_order_on_sine(self):
        errs = []
        for n in (49, 99, 199):
            g = SpatialGrid(n, 1.0)
            x = g.nodes
            errs.append(np.max(np.abs(assemble_d1(g) @ np.sin(math.pi * x) - math.pi * np.cos(math.pi * x))))
        assert math.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.1)

    def test_skew(self):
        dense = assemble_d1(SpatialGrid(9, 1.0)).to_dense()
        np.testing.assert_allclose(dense, -dense.T)


class TestBanded:
    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(5, 40), seed=st.integers(0, 2**16))
    def test_apply_matches_dense(self, n, seed):
        rng = np.random.default_rng(seed)
        op = assemble_d4(SpatialGrid(n, 1.0))
        u = rng.standard_normal(n)
        np.testing.assert_allclose(op @ u, op.to_dense() @ u, rtol=1e-12, atol=1e-6)

    def test_padded_shape(self):
        op = assemble_d1(SpatialGrid(6, 1.0))
        pad = op.padded(2, 2)
        assert pad.shape == (5, 6)
        np.testing.assert_array_equal(pad[1:4], op.bands)

    def test_rejects_bad_band_shape(self):
        with pytest.raises(ValueError):
            BandedOperator(5, 1, 1, np.zeros((2, 5)))


class TestQuadrature:
    def test_sine_square(self):
        g = SpatialGrid(999, 1.0)
        u = np.sin(math.pi * g.nodes)
        assert l2_inner(build_quadrature(g), u, u) == pytest.approx(0.5, abs=1e-5)

    def test_orthogonal(self):
        g = SpatialGrid(999, 1.0)
        q = build_quadrature(g)
        assert abs(l2_inner(q, np.sin(math.pi * g.nodes), np.sin(2 * math.pi * g.nodes))) < 1e-6

    def test_parabola(self):
        g = SpatialGrid(999, 1.0)
        u = g.nodes * (1 - g.nodes)
        assert l2_inner(build_quadrature(g), u, u) == pytest.approx(1.0 / 30.0, abs=1e-5)

    def test_mismatch(self):
        q = build_quadrature(SpatialGrid(10, 1.0))
        with pytest.raises(ValueError):
            l2_inner(q, np.ones(10), np.ones(9))

    def test_operators_bundle(self):
        ops = build_operators(SpatialGrid(11, 1.0))
        assert ops.d4.upper == 2 and ops.d2.upper == 1 and ops.d1.upper == 1
