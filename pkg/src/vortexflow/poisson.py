"""Fast structured-grid Poisson solver for the stream function.

Solves the discrete ``lap(psi) = -omega`` with the same second-order stencil as
:func:`vortexflow.grid.laplacian` on periodic axes, so the round trip
``laplacian(solve_stream(w)) == -w`` holds to transform round-off there.

Periodic axes use the FFT with modified wavenumbers (2 cos(2 pi k / n) - 2)/h^2.
Dirichlet axes (psi = 0 walls, cell-centered nodes with reflected ghosts) use a
type-II sine transform with eigenvalues (2 cos(pi (k+1) / n) - 2)/h^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .grid import DIRICHLET, PERIODIC, GridSpec, ScalarField, VectorField, curl, diff1


@dataclass
class PoissonPlan:
    spec: GridSpec
    symbol: np.ndarray = field(init=False)
    all_periodic: bool = field(init=False)

    def __post_init__(self):
        spec = self.spec
        sym = np.zeros(spec.n)
        for axis in range(spec.dim):
            n, h = spec.n[axis], spec.h
            if spec.bc[axis] == PERIODIC:
                k = np.arange(n)
                lam = (2.0 * np.cos(2.0 * np.pi * k / n) - 2.0) / (h * h)
            else:
                k = np.arange(n)
                lam = (2.0 * np.cos(np.pi * (k + 1) / n) - 2.0) / (h * h)
            shape = [1] * spec.dim
            shape[axis] = n
            sym = sym + lam.reshape(shape)
        self.symbol = sym
        self.all_periodic = all(b == PERIODIC for b in spec.bc)


@dataclass
class SolveDiagnostics:
    """Per-component mean subtracted to satisfy periodic compatibility."""

    subtracted_means: tuple[float, ...]


def _solve_scalar(data: np.ndarray, plan: PoissonPlan) -> tuple[np.ndarray, float]:
    spec = plan.spec
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite values in Poisson right-hand side")
    mean = 0.0
    if plan.all_periodic:
        mean = float(data.mean())
        data = data - mean
    work = data
    dir_axes = [a for a in range(spec.dim) if spec.bc[a] == DIRICHLET]
    per_axes = [a for a in range(spec.dim) if spec.bc[a] == PERIODIC]
    for a in dir_axes:
        work = sfft.dst(work, type=2, axis=a)
    if per_axes:
        work = sfft.fftn(work, axes=per_axes)
    # lap(psi) = -omega  =>  psi_hat = omega_hat / (-symbol)
    denom = -plan.symbol
    if plan.all_periodic:
        denom = denom.copy()
        denom[(0,) * spec.dim] = 1.0  # zero mode already removed
    work = work / denom
    if plan.all_periodic:
        work[(0,) * spec.dim] = 0.0
    if per_axes:
        work = sfft.ifftn(work, axes=per_axes)
        work = work.real
    for a in dir_axes:
        work = sfft.idst(work, type=2, axis=a)
    return np.ascontiguousarray(work), mean


def solve_stream(omega, plan: PoissonPlan):
    """Stream function from vorticity; returns (psi, SolveDiagnostics)."""
    if omega.spec != plan.spec:
        raise ValueError("field grid does not match plan grid")
    if isinstance(omega, ScalarField):
        psi, mean = _solve_scalar(omega.data, plan)
        return ScalarField(plan.spec, psi), SolveDiagnostics((mean,))
    comps, means = [], []
    for c in omega.components:
        psi, mean = _solve_scalar(c, plan)
        comps.append(psi)
        means.append(mean)
    return VectorField(plan.spec, tuple(comps)), SolveDiagnostics(tuple(means))


def velocity_from_stream(psi) -> VectorField:
    """u = curl(psi): 2D (dy psi, -dx psi), 3D vector curl."""
    spec = psi.spec
    if isinstance(psi, ScalarField):
        if spec.dim != 2:
            raise ValueError("scalar stream function is a 2D object")
        ux = diff1(psi.data, 1, spec)
        uy = -diff1(psi.data, 0, spec)
        return VectorField(spec, (ux, uy))
    return curl(psi)
