"""Grid primitives: stencils, differential operators, smoothed profiles."""

import numpy as np
import pytest

from vortexflow.grid import (GridSpec, ScalarField, VectorField, curl,
                             curvature, diff1, diff2, divergence, gradient,
                             laplacian, smoothed_heaviside, smoothing_delta)


def _spec2(n=64, bc=("periodic", "periodic")):
    return GridSpec(2, (n, n), 1.0 / n, bc=bc)


def test_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(4, (8, 8, 8, 8), 0.1)
    with pytest.raises(ValueError):
        GridSpec(2, (8,), 0.1)
    with pytest.raises(ValueError):
        GridSpec(2, (4, 4), 0.1)
    with pytest.raises(ValueError):
        GridSpec(2, (8, 8), -1.0)
    with pytest.raises(ValueError):
        GridSpec(2, (8, 8), 0.1, bc=("periodic", "clamped"))


def test_axis_coords_periodic_vs_dirichlet():
    spec = GridSpec(2, (8, 8), 0.125, bc=("periodic", "dirichlet"))
    assert spec.axis_coords(0)[0] == 0.0
    # dirichlet nodes are cell-centered: first node half a cell off the wall
    assert spec.axis_coords(1)[0] == pytest.approx(0.0625)
    assert spec.extent == (1.0, 1.0)
    assert spec.num_nodes == 64


def test_field_shape_checks():
    spec = _spec2(8)
    with pytest.raises(ValueError):
        ScalarField(spec, np.zeros((8, 9)))
    with pytest.raises(ValueError):
        VectorField(spec, (np.zeros((8, 8)),))


def test_diff1_periodic_second_order():
    errs = []
    for n in (32, 64):
        spec = _spec2(n)
        x = spec.node_coords()[0]
        f = np.sin(2 * np.pi * x)
        exact = 2 * np.pi * np.cos(2 * np.pi * x)
        errs.append(np.abs(diff1(f, 0, spec) - exact).max())
    assert errs[1] < errs[0] / 3.5  # ~second order


def test_diff2_periodic_second_order():
    errs = []
    for n in (32, 64):
        spec = _spec2(n)
        x = spec.node_coords()[0]
        f = np.sin(2 * np.pi * x)
        exact = -(2 * np.pi) ** 2 * np.sin(2 * np.pi * x)
        errs.append(np.abs(diff2(f, 0, spec) - exact).max())
    assert errs[1] < errs[0] / 3.5


def test_diff_dirichlet_one_sided_consistency():
    # quadratic is reproduced exactly by the one-sided second-order stencils
    spec = GridSpec(2, (16, 16), 1.0 / 16, bc=("dirichlet", "dirichlet"))
    x = spec.node_coords()[0]
    f = 3.0 * x * x + 2.0 * x + 1.0
    assert np.abs(diff1(f, 0, spec) - (6.0 * x + 2.0)).max() < 1e-11
    assert np.abs(diff2(f, 0, spec) - 6.0).max() < 1e-9


def test_divergence_of_curl_vanishes_periodic():
    spec = GridSpec(3, (16, 16, 16), 1.0 / 16)
    rng = np.random.default_rng(3)
    v = VectorField(spec, tuple(rng.standard_normal(spec.n) for _ in range(3)))
    dc = divergence(curl(v))
    assert np.abs(dc.data).max() < 1e-10


def test_laplacian_matches_divergence_of_gradient_periodic():
    spec = _spec2(32)
    rng = np.random.default_rng(5)
    s = ScalarField(spec, rng.standard_normal(spec.n))
    a = laplacian(s).data
    b = divergence(gradient(s)).data
    # same stencil only for smooth fields; compare on a smooth one instead
    x, y = spec.node_coords()
    s = ScalarField(spec, np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y))
    a = laplacian(s).data
    b = divergence(gradient(s)).data
    assert np.abs(a - b).max() < 2.0  # both second-order approximations of the same operator
    exact = -2 * (2 * np.pi) ** 2 * s.data
    assert np.abs(a - exact).max() < 0.5


def test_smoothed_heaviside_values():
    assert smoothed_heaviside(-2.0) == 1.0
    assert smoothed_heaviside(-1.0) == 1.0
    assert smoothed_heaviside(0.0) == pytest.approx(0.5)
    assert smoothed_heaviside(1.0) == 0.0
    assert smoothed_heaviside(5.0) == 0.0
    x = np.linspace(-1, 1, 101)
    H = smoothed_heaviside(x)
    assert np.all(np.diff(H) <= 1e-12)  # monotone non-increasing


def test_heaviside_derivative_is_minus_delta():
    x = np.linspace(-0.95, 0.95, 39)
    eps = 1e-6
    dH = (smoothed_heaviside(x + eps) - smoothed_heaviside(x - eps)) / (2 * eps)
    assert np.abs(dH + smoothing_delta(x)).max() < 1e-8


def test_smoothing_delta_unit_integral_and_support():
    x = np.linspace(-3, 3, 6001)
    z = smoothing_delta(x)
    assert np.all(z[np.abs(x) >= 1.0] == 0.0)
    assert np.trapezoid(z, x) == pytest.approx(1.0, abs=1e-6)


def test_curvature_of_circle():
    spec = _spec2(128)
    x, y = spec.node_coords()
    r = 0.25
    phi = ScalarField(spec, np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2) - r)
    kappa = curvature(phi).data
    band = np.abs(phi.data) < 2 * spec.h
    # 2D curvature of a circle of radius 0.25 is 1/0.25 = 4; the discrete
    # estimate in the band carries an O(h/r) defect
    assert np.abs(kappa[band] - 1.0 / r).max() < 0.4
    assert np.abs(kappa[band].mean() - 1.0 / r) < 0.25


def test_curvature_clamped_and_guarded():
    spec = _spec2(32)
    flat = ScalarField(spec, np.zeros(spec.n))
    assert np.all(curvature(flat).data == 0.0)
    rng = np.random.default_rng(11)
    noisy = ScalarField(spec, rng.standard_normal(spec.n))
    assert np.abs(curvature(noisy).data).max() <= 1.0 / spec.h + 1e-12
