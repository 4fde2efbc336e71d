"""Uniform Cartesian grid, second-order stencils and smoothed step/bump profiles.

Fields are node-centered: one node per cell, array shape ``spec.n`` with axis 0 = x.
Along a periodic axis node i sits at ``origin + i*h`` and neighbors wrap.
Along a dirichlet axis nodes sit at cell centers, ``origin + (i + 0.5)*h``, with
the physical walls at ``origin`` and ``origin + n*h``; stencils fall back to
one-sided second-order differences in the boundary layer.

File dumps serialize node values x-fastest (Fortran flattening of these arrays);
see :mod:`vortexflow.scene_io`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform 2D/3D grid with square/cubic cells."""

    dim: int
    n: tuple[int, ...]
    h: float
    origin: tuple[float, ...] = None
    bc: tuple[str, ...] = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if len(self.n) != self.dim or any(v < 8 for v in self.n):
            raise ValueError(f"need {self.dim} axis sizes, each >= 8, got {self.n}")
        if not self.h > 0:
            raise ValueError("h must be positive")
        origin = self.origin if self.origin is not None else (0.0,) * self.dim
        object.__setattr__(self, "origin", tuple(float(v) for v in origin))
        bc = self.bc if self.bc is not None else (PERIODIC,) * self.dim
        if len(bc) != self.dim or any(b not in (PERIODIC, DIRICHLET) for b in bc):
            raise ValueError(f"bad boundary kinds {bc}")
        object.__setattr__(self, "bc", tuple(bc))

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple(ni * self.h for ni in self.n)

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.n))

    def axis_coords(self, axis: int) -> np.ndarray:
        shift = 0.5 if self.bc[axis] == DIRICHLET else 0.0
        return self.origin[axis] + (np.arange(self.n[axis]) + shift) * self.h

    def node_coords(self) -> list[np.ndarray]:
        """Per-axis coordinate arrays broadcastable over the field shape."""
        return list(np.meshgrid(*[self.axis_coords(a) for a in range(self.dim)],
                                indexing="ij"))


@dataclass
class ScalarField:
    spec: GridSpec
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != self.spec.n:
            raise ValueError(f"data shape {self.data.shape} != grid {self.spec.n}")

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ScalarField":
        return cls(spec, np.zeros(spec.n))

    def copy(self) -> "ScalarField":
        return ScalarField(self.spec, self.data.copy())


@dataclass
class VectorField:
    spec: GridSpec
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=np.float64) for c in self.components)
        if len(comps) != self.spec.dim:
            raise ValueError("component count must equal dim")
        for c in comps:
            if c.shape != self.spec.n:
                raise ValueError(f"component shape {c.shape} != grid {self.spec.n}")
        self.components = comps

    @classmethod
    def zeros(cls, spec: GridSpec) -> "VectorField":
        return cls(spec, tuple(np.zeros(spec.n) for _ in range(spec.dim)))

    def copy(self) -> "VectorField":
        return VectorField(self.spec, tuple(c.copy() for c in self.components))


def _check_same_spec(*fields):
    spec = fields[0].spec
    for f in fields[1:]:
        if f.spec != spec:
            raise ValueError("fields live on different grids")
    return spec


def diff1(data: np.ndarray, axis: int, spec: GridSpec) -> np.ndarray:
    """Centered first derivative; one-sided second order at dirichlet walls."""
    h = spec.h
    if spec.bc[axis] == PERIODIC:
        return (np.roll(data, -1, axis) - np.roll(data, 1, axis)) / (2 * h)
    out = np.empty_like(data)
    sl = [slice(None)] * data.ndim

    def at(i):
        s = list(sl)
        s[axis] = i
        return tuple(s)

    out[at(slice(1, -1))] = (data[at(slice(2, None))] - data[at(slice(None, -2))]) / (2 * h)
    out[at(0)] = (-3 * data[at(0)] + 4 * data[at(1)] - data[at(2)]) / (2 * h)
    out[at(-1)] = (3 * data[at(-1)] - 4 * data[at(-2)] + data[at(-3)]) / (2 * h)
    return out


def diff2(data: np.ndarray, axis: int, spec: GridSpec) -> np.ndarray:
    """Centered second derivative; one-sided second order at dirichlet walls."""
    h2 = spec.h * spec.h
    if spec.bc[axis] == PERIODIC:
        return (np.roll(data, -1, axis) - 2 * data + np.roll(data, 1, axis)) / h2
    out = np.empty_like(data)
    sl = [slice(None)] * data.ndim

    def at(i):
        s = list(sl)
        s[axis] = i
        return tuple(s)

    out[at(slice(1, -1))] = (
        data[at(slice(2, None))] - 2 * data[at(slice(1, -1))] + data[at(slice(None, -2))]
    ) / h2
    out[at(0)] = (2 * data[at(0)] - 5 * data[at(1)] + 4 * data[at(2)] - data[at(3)]) / h2
    out[at(-1)] = (2 * data[at(-1)] - 5 * data[at(-2)] + 4 * data[at(-3)] - data[at(-4)]) / h2
    return out


def gradient(s: ScalarField) -> VectorField:
    return VectorField(s.spec, tuple(diff1(s.data, a, s.spec) for a in range(s.spec.dim)))


def divergence(v: VectorField) -> ScalarField:
    spec = v.spec
    out = diff1(v.components[0], 0, spec)
    for a in range(1, spec.dim):
        out = out + diff1(v.components[a], a, spec)
    return ScalarField(spec, out)


def laplacian(s: ScalarField) -> ScalarField:
    spec = s.spec
    out = diff2(s.data, 0, spec)
    for a in range(1, spec.dim):
        out = out + diff2(s.data, a, spec)
    return ScalarField(spec, out)


def curl(v: VectorField):
    """3D: vector curl. 2D: scalar dx(vy) - dy(vx)."""
    spec = v.spec
    if spec.dim == 2:
        vx, vy = v.components
        return ScalarField(spec, diff1(vy, 0, spec) - diff1(vx, 1, spec))
    vx, vy, vz = v.components
    cx = diff1(vz, 1, spec) - diff1(vy, 2, spec)
    cy = diff1(vx, 2, spec) - diff1(vz, 0, spec)
    cz = diff1(vy, 0, spec) - diff1(vx, 1, spec)
    return VectorField(spec, (cx, cy, cz))


def smoothed_heaviside(x):
    """Regularized step: 1 on the negative side, 0 on the positive side.

    H(x) = 1 for x <= -1, 0 for x >= 1, (1 - x - sin(pi x)/pi)/2 in between.
    C1, monotone non-increasing, dH/dx = -smoothing_delta(x).
    """
    x = np.asarray(x, dtype=np.float64)
    mid = 0.5 * (1.0 - x - np.sin(np.pi * np.clip(x, -1.0, 1.0)) / np.pi)
    out = np.where(x <= -1.0, 1.0, np.where(x >= 1.0, 0.0, mid))
    return out if out.ndim else float(out)


def smoothing_delta(x):
    """Compactly supported bump (1 + cos(pi x))/2 on [-1, 1]; unit integral."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(np.abs(x) < 1.0, 0.5 * (1.0 + np.cos(np.pi * np.clip(x, -1.0, 1.0))), 0.0)
    return out if out.ndim else float(out)


def curvature(phi: ScalarField, grad_floor: float = 1e-8) -> ScalarField:
    """kappa = div(grad(phi)/|grad(phi)|), zeroed where |grad phi| degenerates.

    Output is clamped to |kappa| <= 1/h, the resolution limit of the grid.
    """
    spec = phi.spec
    g = gradient(phi)
    mag = np.sqrt(sum(c * c for c in g.components))
    ok = mag >= grad_floor
    safe = np.where(ok, mag, 1.0)
    unit = VectorField(spec, tuple(np.where(ok, c / safe, 0.0) for c in g.components))
    kappa = divergence(unit).data
    kappa = np.where(ok, np.clip(kappa, -1.0 / spec.h, 1.0 / spec.h), 0.0)
    return ScalarField(spec, kappa)
