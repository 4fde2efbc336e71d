"""Vortex particles: M4' interpolation/remeshing, RK advection, node creation.

All transfer operators use the tensor-product M4' kernel (4 nearest nodes per
axis, moments preserved up to order 2). The grid->particle gather and the
particle->grid scatter are exact transposes of each other.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .grid import DIRICHLET, PERIODIC, GridSpec, ScalarField, VectorField


def m4prime(x):
    """M4' kernel: 1 - 5x^2/2 + 3|x|^3/2 on [0,1], (2-|x|)^2(1-|x|)/2 on (1,2]."""
    r = np.abs(np.asarray(x, dtype=np.float64))
    inner = 1.0 - 2.5 * r * r + 1.5 * r ** 3
    outer = 0.5 * (2.0 - r) ** 2 * (1.0 - r)
    out = np.where(r <= 1.0, inner, np.where(r <= 2.0, outer, 0.0))
    return out if out.ndim else float(out)


@dataclass
class ParticleSet:
    """Positions (N, dim), strengths (N,) in 2D or (N, 3) in 3D, shared volume."""

    positions: np.ndarray
    strengths: np.ndarray
    volume: float
    dim: int

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=np.float64))
        self.strengths = np.asarray(self.strengths, dtype=np.float64)
        if self.count and not np.all(np.isfinite(self.positions)):
            raise ValueError("non-finite particle position")
        if self.count and not np.all(np.isfinite(self.strengths)):
            raise ValueError("non-finite particle strength")

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def empty(cls, spec: GridSpec) -> "ParticleSet":
        shape = (0,) if spec.dim == 2 else (0, 3)
        return cls(np.zeros((0, spec.dim)), np.zeros(shape), spec.h ** spec.dim, spec.dim)


def _stencil(positions: np.ndarray, spec: GridSpec):
    """Per-axis node indices (N, 4) and M4' weights (N, 4) for each particle.

    On dirichlet axes, stencil nodes outside the domain get index -1 and
    weight 0 (they contribute nothing in either transfer direction).
    """
    idx, wts = [], []
    for a in range(spec.dim):
        shift = 0.5 if spec.bc[a] == DIRICHLET else 0.0
        s = (positions[:, a] - spec.origin[a]) / spec.h - shift
        base = np.floor(s).astype(np.int64)
        offs = base[:, None] + np.arange(-1, 3)[None, :]
        w = m4prime(s[:, None] - offs)
        n = spec.n[a]
        if spec.bc[a] == PERIODIC:
            offs = np.mod(offs, n)
        else:
            bad = (offs < 0) | (offs >= n)
            w = np.where(bad, 0.0, w)
            offs = np.where(bad, 0, offs)
        idx.append(offs)
        wts.append(w)
    return idx, wts


def _gather_one(data: np.ndarray, idx, wts, out: np.ndarray) -> None:
    dim = len(idx)
    for combo in product(range(4), repeat=dim):
        w = wts[0][:, combo[0]]
        for a in range(1, dim):
            w = w * wts[a][:, combo[a]]
        sel = tuple(idx[a][:, combo[a]] for a in range(dim))
        out += w * data[sel]


def interpolate_to_particles(field, positions: np.ndarray, threads: int = 1):
    """Sample a field at arbitrary positions with the tensor M4' kernel.

    Returns (N,) for a ScalarField, (N, dim) for a VectorField. `threads`
    splits the particle range into disjoint chunks; results are bit-identical
    for any thread count.
    """
    spec = field.spec
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    if positions.size and not np.all(np.isfinite(positions)):
        raise ValueError("non-finite sample position")
    npart = positions.shape[0]
    comps = (field.data,) if isinstance(field, ScalarField) else field.components
    out = np.zeros((npart, len(comps)))

    def work(lo, hi):
        idx, wts = _stencil(positions[lo:hi], spec)
        for c, data in enumerate(comps):
            _gather_one(data, idx, wts, out[lo:hi, c])

    if threads <= 1 or npart < 2048:
        work(0, npart)
    else:
        bounds = np.linspace(0, npart, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: work(*b), zip(bounds[:-1], bounds[1:])))
    return out[:, 0] if isinstance(field, ScalarField) else out


def remesh(particles: ParticleSet, spec: GridSpec):
    """Scatter particle strengths onto grid nodes (transpose of the gather)."""
    scalar = spec.dim == 2
    ncomp = 1 if scalar else 3
    grids = [np.zeros(spec.n) for _ in range(ncomp)]
    if particles.count:
        idx, wts = _stencil(particles.positions, spec)
        strengths = particles.strengths.reshape(particles.count, ncomp)
        for combo in product(range(4), repeat=spec.dim):
            w = wts[0][:, combo[0]]
            for a in range(1, spec.dim):
                w = w * wts[a][:, combo[a]]
            sel = tuple(idx[a][:, combo[a]] for a in range(spec.dim))
            for c in range(ncomp):
                np.add.at(grids[c], sel, w * strengths[:, c])
    if scalar:
        return ScalarField(spec, grids[0])
    return VectorField(spec, tuple(grids))


def _wrap_positions(positions: np.ndarray, spec: GridSpec) -> np.ndarray:
    out = positions.copy()
    for a in range(spec.dim):
        o, ext = spec.origin[a], spec.extent[a]
        if spec.bc[a] == PERIODIC:
            out[:, a] = o + np.mod(out[:, a] - o, ext)
        else:
            out[:, a] = np.clip(out[:, a], o, o + ext * (1.0 - 1e-12))
    return out


def advect_rk2(particles: ParticleSet, spec: GridSpec, velocity_sampler,
               strength_rhs_sampler, dt: float) -> ParticleSet:
    """Midpoint update of positions; strengths integrate the frozen source.

    The strength right-hand side is assembled on the grid once per step and
    sampled at the departure positions, which makes the node-sum of the source
    telescope exactly into the circulation budget.
    """
    if particles.count == 0:
        return particles
    x0 = particles.positions
    u0 = velocity_sampler(x0)
    if not np.all(np.isfinite(u0)):
        raise FloatingPointError("NaN velocity sampled during particle advection")
    xm = _wrap_positions(x0 + 0.5 * dt * u0, spec)
    um = velocity_sampler(xm)
    if not np.all(np.isfinite(um)):
        raise FloatingPointError("NaN velocity sampled during particle advection")
    xn = _wrap_positions(x0 + dt * um, spec)
    strengths = particles.strengths
    if strength_rhs_sampler is not None:
        rhs = strength_rhs_sampler(x0)
        if not np.all(np.isfinite(rhs)):
            raise FloatingPointError("NaN strength source sampled during advection")
        strengths = strengths + dt * rhs.reshape(strengths.shape)
    return ParticleSet(xn, strengths, particles.volume, particles.dim)


def advect_rk4(particles: ParticleSet, spec: GridSpec, velocity_sampler,
               strength_rhs_sampler, dt: float) -> ParticleSet:
    """Classical RK4 on positions against the frozen velocity field."""
    if particles.count == 0:
        return particles
    x0 = particles.positions
    k1 = velocity_sampler(x0)
    k2 = velocity_sampler(_wrap_positions(x0 + 0.5 * dt * k1, spec))
    k3 = velocity_sampler(_wrap_positions(x0 + 0.5 * dt * k2, spec))
    k4 = velocity_sampler(_wrap_positions(x0 + dt * k3, spec))
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise FloatingPointError("NaN velocity sampled during particle advection")
    xn = _wrap_positions(x0 + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), spec)
    strengths = particles.strengths
    if strength_rhs_sampler is not None:
        rhs = strength_rhs_sampler(x0)
        if not np.all(np.isfinite(rhs)):
            raise FloatingPointError("NaN strength source sampled during advection")
        strengths = strengths + dt * rhs.reshape(strengths.shape)
    return ParticleSet(xn, strengths, particles.volume, particles.dim)


def strength_magnitude(omega) -> np.ndarray:
    if isinstance(omega, ScalarField):
        return np.abs(omega.data)
    return np.sqrt(sum(c * c for c in omega.components))


def create_particles(omega, threshold_rel: float,
                     extra_mask: np.ndarray | None = None) -> ParticleSet:
    """One particle per node where |omega| exceeds threshold_rel * max|omega|.

    `extra_mask` forces creation at additional nodes (used by the solver to
    seed nodes where the vorticity sources are about to act).
    """
    spec = omega.spec
    mag = strength_magnitude(omega)
    peak = mag.max() if mag.size else 0.0
    mask = mag > threshold_rel * peak if peak > 0 else np.zeros(spec.n, dtype=bool)
    if extra_mask is not None:
        mask = mask | extra_mask
    if not mask.any():
        return ParticleSet.empty(spec)
    nodes = np.argwhere(mask)
    pos = np.empty((nodes.shape[0], spec.dim))
    for a in range(spec.dim):
        shift = 0.5 if spec.bc[a] == DIRICHLET else 0.0
        pos[:, a] = spec.origin[a] + (nodes[:, a] + shift) * spec.h
    if isinstance(omega, ScalarField):
        strengths = omega.data[mask]
    else:
        strengths = np.stack([c[mask] for c in omega.components], axis=1)
    return ParticleSet(pos, strengths, spec.h ** spec.dim, spec.dim)
