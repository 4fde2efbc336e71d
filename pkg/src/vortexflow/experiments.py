"""Built-in validation and demo scenes with automated pass/fail analysis.

The falling-cylinder case: a disk of density 2 sinking through a periodic
unit box of fluid at density 1, viscosity 0.001, gravity (0, -1). The body's
vertical velocity must plateau near -0.47 (reference value from a body-fitted
finite-volume computation of the same setup).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import solver
from .grid import ScalarField
from .scene_io import BodyConfig, PhiPrimitive, SceneConfig

CYLINDER_DT = {128: 0.01, 256: 0.0038, 300: 0.0027}
CYLINDER_DURATION = {128: 2.5, 256: 3.5, 300: 3.5}
# The Heaviside half-width is a physical parameter of the case (two cells of
# the coarsest grid), kept fixed under refinement so the boundary-layer model
# converges instead of thinning away.
CYLINDER_EPSILON = 2.0 / 128.0
PLATEAU_TARGET = -0.47
PLATEAU_BAND = {128: (-0.55, -0.38), 256: (-0.52, -0.42), 300: (-0.52, -0.42)}


def cylinder_config(resolution: int, duration: float = None,
                    threads: int = 1) -> SceneConfig:
    if resolution not in CYLINDER_DT:
        raise ValueError(f"resolution must be one of {sorted(CYLINDER_DT)}")
    if duration is None:
        duration = CYLINDER_DURATION[resolution]
    return SceneConfig(
        dim=2, n=(resolution, resolution), extent=(1.0, 1.0),
        bc=("periodic", "periodic"),
        rho1=1.0, rho2=1.0, nu1=0.001, nu2=0.001, tau=0.0,
        epsilon_factor=CYLINDER_EPSILON * resolution,
        phi=PhiPrimitive("none"),
        gravity=(0.0, -1.0),
        bodies=[BodyConfig("ball", (0.1,), density=2.0, center=(0.5, 0.5))],
        dt=CYLINDER_DT[resolution], duration=duration, threads=threads,
        out_dir="out/cylinder_%d" % resolution)


@dataclass
class ValidationResult:
    resolution: int
    times: np.ndarray
    v_y: np.ndarray
    plateau: float
    passed: bool
    symmetry_defect: float
    snapshots: dict[float, ScalarField] = field(default_factory=dict)


def _mirror_defect(omega: ScalarField) -> float:
    """Asymmetry of omega under x -> 1 - x about the initial body center.

    Symmetric initial data makes the vorticity mirror-antisymmetric; the defect
    is max |omega + mirrored omega| / max |omega|.
    """
    data = omega.data
    mirrored = np.roll(data[::-1, ...], 1, axis=0)
    peak = np.abs(data).max()
    if peak == 0:
        return 0.0
    return float(np.abs(data + mirrored).max() / peak)


def run_falling_cylinder(resolution: int, duration: float = None,
                         snapshot_times=(0.5, 2.5), threads: int = 1,
                         progress=None) -> ValidationResult:
    cfg = cylinder_config(resolution, duration, threads)
    duration = cfg.duration
    state = solver.state_from_config(cfg)
    n_steps = int(round(duration / cfg.dt))
    times = np.empty(n_steps)
    v_y = np.empty(n_steps)
    sym = 0.0
    snapshots = {}
    want = sorted(snapshot_times)
    for k in range(n_steps):
        solver.step(state)
        times[k] = state.t
        v_y[k] = state.bodies[0].U[1]
        if state.t <= 0.5 + 1e-12 and state.step_index % 5 == 0:
            sym = max(sym, _mirror_defect(state.omega))
        while want and state.t >= want[0] - 1e-9:
            snapshots[want.pop(0)] = state.omega.copy()
        if progress is not None and state.step_index % 25 == 0:
            progress(state)
    tail = times >= max(2.0, times[-1] * 0.8)
    plateau = float(v_y[tail].mean())
    lo, hi = PLATEAU_BAND[resolution]
    return ValidationResult(resolution, times, v_y, plateau,
                            lo <= plateau <= hi, sym, snapshots)


def smoke_config(name: str) -> SceneConfig:
    """Reduced-resolution 3D demo scenes used for qualitative checks."""
    if name == "two_spheres_small":
        return SceneConfig(
            dim=3, n=(32, 16, 32), extent=(1.0, 0.5, 1.0),
            bc=("periodic", "periodic", "dirichlet"),
            rho1=1.0, rho2=0.001, nu1=1.0e-6, nu2=0.82e-6, tau=0.0,
            phi=PhiPrimitive("halfspace", (0.7,), axis=2),
            gravity=(0.0, 0.0, -10.0),
            bodies=[BodyConfig("ball", (0.07,), 2.0, (0.35, 0.25, 0.5)),
                    BodyConfig("ball", (0.07,), 2.0, (0.65, 0.25, 0.55))],
            dt=0.01, duration=1.0, out_dir="out/two_spheres_small")
    if name == "water_wall_small":
        return SceneConfig(
            dim=3, n=(32, 16, 32), extent=(1.0, 0.5, 1.0),
            bc=("periodic", "periodic", "dirichlet"),
            rho1=1.0, rho2=0.001, nu1=1.0e-6, nu2=0.82e-6, tau=1.0e-6,
            phi=PhiPrimitive("column", (0.05, 0.35), axis=0),
            gravity=(0.0, 0.0, -10.0),
            bodies=[BodyConfig("box", (0.06, 0.06, 0.06), 2.5, (0.7, 0.25, 0.09))],
            dt=0.01, duration=1.0, out_dir="out/water_wall_small")
    if name == "cup_small":
        return SceneConfig(
            dim=3, n=(32, 16, 32), extent=(1.0, 0.5, 1.0),
            bc=("periodic", "periodic", "dirichlet"),
            rho1=1.0, rho2=0.001, nu1=1.0e-6, nu2=0.82e-6, tau=1.0e-6,
            phi=PhiPrimitive("halfspace", (0.55,), axis=2),
            gravity=(0.0, 0.0, -10.0),
            bodies=[BodyConfig("box", (0.08, 0.08, 0.05), 1.5, (0.5, 0.25, 0.75))],
            dt=0.01, duration=1.0, out_dir="out/cup_small")
    raise ValueError(f"unknown smoke scene '{name}'")


@dataclass
class SmokeSummary:
    name: str
    steps: int
    max_speed: float
    enstrophy: float
    volume_drift: float
    body_dz: list[float]
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def run_scene_smoke(name: str, n_steps: int = 100) -> SmokeSummary:
    cfg = smoke_config(name)
    state = solver.state_from_config(cfg)
    vol0 = solver.liquid_volume(state)
    for _ in range(n_steps):
        solver.step(state)
    vol = solver.liquid_volume(state)
    drift = abs(vol - vol0) / vol0
    umax = max(float(np.max(np.abs(c))) for c in state.u.components)
    ens = solver.enstrophy(state)
    dz = [float(b.translation[2]) for b in state.bodies]
    checks = {
        "finite": np.isfinite(umax) and np.isfinite(ens),
        "volume_drift_below_5pct": drift < 0.05,
    }
    if name == "two_spheres_small":
        checks["spheres_sink"] = all(v < 0 for v in dz)
    return SmokeSummary(name, n_steps, umax, ens, drift, dz, checks)
