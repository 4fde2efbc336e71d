"""Level-set interface: transport, redistancing, material fields, sources."""

import numpy as np
import pytest

from vortexflow.grid import GridSpec, ScalarField, VectorField
from vortexflow.interface import (FluidInterface, advect_phi_semi_lagrangian,
                                  buoyancy_curl, density_field,
                                  density_gradient, gravity_curl, reinitialize,
                                  sample_linear, surface_tension_source,
                                  viscosity_field)


def _spec(n=64, bc=None):
    return GridSpec(2, (n, n), 1.0 / n, bc=bc)


def _circle_phi(spec, cx=0.5, cy=0.5, r=0.2, scale=1.0):
    x, y = spec.node_coords()
    return ScalarField(spec, scale * (np.sqrt((x - cx) ** 2 + (y - cy) ** 2) - r))


def _iface(phi, rho1=2.0, rho2=1.0, nu1=0.02, nu2=0.01, tau=0.0):
    return FluidInterface(phi, rho1, rho2, nu1, nu2, tau)


def test_interface_validation():
    spec = _spec(16)
    phi = _circle_phi(spec)
    with pytest.raises(ValueError):
        FluidInterface(phi, -1.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        FluidInterface(phi, 1.0, 1.0, -0.1, 0.0)
    iface = FluidInterface(phi, 1.0, 1.0, 0.0, 0.0)
    assert iface.epsilon == pytest.approx(2.0 * spec.h)


def test_density_field_saturation():
    spec = _spec(16)
    eps = 2.0 * spec.h
    low = _iface(ScalarField(spec, np.full(spec.n, -10 * eps)))
    assert np.all(density_field(low).data == 2.0)
    assert np.all(viscosity_field(low).data == 0.02)
    high = _iface(ScalarField(spec, np.full(spec.n, 10 * eps)))
    assert np.all(density_field(high).data == 1.0)
    assert np.all(viscosity_field(high).data == 0.01)


def test_density_field_midpoint_on_interface():
    spec = _spec(16)
    iface = _iface(ScalarField(spec, np.zeros(spec.n)))
    assert np.all(np.abs(density_field(iface).data - 1.5) < 1e-12)


def test_sample_linear_reproduces_linear_periodic_interior():
    spec = _spec(32)
    x, y = spec.node_coords()
    data = 2.0 * x - y
    rng = np.random.default_rng(0)
    pos = 0.2 + 0.6 * rng.random((100, 2))
    vals = sample_linear(data, pos, spec)
    assert np.abs(vals - (2.0 * pos[:, 0] - pos[:, 1])).max() < 1e-12


def test_advect_phi_translation():
    spec = _spec(64)
    phi = _circle_phi(spec, cx=0.4)
    u = VectorField(spec, (np.full(spec.n, 0.5), np.zeros(spec.n)))
    out = phi
    for _ in range(10):
        out = advect_phi_semi_lagrangian(out, u, 0.02)
    expect = _circle_phi(spec, cx=0.5)
    band = np.abs(expect.data) < 4 * spec.h
    assert np.abs(out.data - expect.data)[band].max() < 2 * spec.h


def test_advect_phi_grid_mismatch():
    phi = _circle_phi(_spec(32))
    u = VectorField.zeros(_spec(16))
    with pytest.raises(ValueError):
        advect_phi_semi_lagrangian(phi, u, 0.01)


def test_reinitialize_fixed_point_on_plane():
    spec = _spec(64)
    x, _ = spec.node_coords()
    phi = ScalarField(spec, x - 0.503)
    out = reinitialize(phi, 10)
    interior = (x > 0.2) & (x < 0.8)  # away from the periodic seam
    assert np.abs(out.data - phi.data)[interior].max() < 1e-8


def test_reinitialize_restores_unit_gradient():
    spec = _spec(128)
    phi = _circle_phi(spec, r=0.25, scale=2.0)
    out = reinitialize(phi, 50)
    g = np.gradient(out.data, spec.h, axis=0), np.gradient(out.data, spec.h, axis=1)
    mag = np.hypot(*g)
    band = np.abs(out.data) < 6 * spec.h
    assert np.abs(mag[band] - 1.0).max() < 0.1


def test_reinitialize_keeps_far_signs():
    spec = _spec(64)
    phi = _circle_phi(spec, r=0.25, scale=3.0)
    out = reinitialize(phi, 30)
    far = np.abs(phi.data / 3.0) > 2 * spec.h
    assert np.all(np.sign(out.data[far]) == np.sign(phi.data[far]))


def test_density_gradient_band_localized():
    spec = _spec(64)
    iface = _iface(_circle_phi(spec))
    g = density_gradient(iface)
    mag = np.hypot(*g.components)
    outside = np.abs(iface.phi.data) > iface.epsilon + 2 * spec.h
    assert np.all(mag[outside] == 0.0)
    assert mag.max() > 0.0


def test_gravity_curl_uniform_density_zero():
    spec = _spec(32)
    rho = ScalarField(spec, np.full(spec.n, 1.7))
    out = gravity_curl(rho, (0.0, -1.0))
    assert np.all(out.data == 0.0)


def test_buoyancy_curl_telescopes_to_zero():
    spec = _spec(64)
    iface = _iface(_circle_phi(spec))
    src = buoyancy_curl(iface, (0.3, -1.0))
    assert abs(src.data.sum()) < 1e-12 * np.abs(src.data).max()
    assert np.abs(src.data).max() > 0.0


def test_buoyancy_curl_3d_components():
    spec = GridSpec(3, (16, 16, 16), 1.0 / 16)
    x, y, z = spec.node_coords()
    phi = ScalarField(spec, z - 0.5)
    iface = FluidInterface(phi, 2.0, 1.0, 0.0, 0.0)
    src = buoyancy_curl(iface, (0.0, 0.0, -10.0))
    # gravity along z and the density gradient along z give zero curl
    for c in src.components:
        assert np.abs(c).max() < 1e-12


def test_surface_tension_zero_without_tau():
    spec = _spec(32)
    iface = _iface(_circle_phi(spec), tau=0.0)
    out = surface_tension_source(iface)
    assert np.all(out.data == 0.0)


def test_surface_tension_band_and_balance():
    spec = _spec(64)
    iface = _iface(_circle_phi(spec, r=0.25), tau=0.1)
    src = surface_tension_source(iface)
    # a curl telescopes: no net circulation injected
    assert abs(src.data.sum()) < 1e-10 * max(np.abs(src.data).max(), 1.0)
    outside = np.abs(iface.phi.data) > iface.epsilon + 3 * spec.h
    assert np.abs(src.data[outside]).max() < 1e-12 * np.abs(src.data).max()
