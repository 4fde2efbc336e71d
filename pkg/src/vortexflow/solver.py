"""Time-step orchestration: the eight-stage advance with bi-phase and rigid terms.

One step runs: stream solve, velocity recovery, rigid projection/blending and
penalization, right-hand-side assembly, particle interpolation + RK advection,
grid level-set transport, body advance, remeshing, explicit diffusion, an
end-of-step rigid vorticity re-blend, and fresh particle creation. Stage names
are traced in a canonical order and wall time is accumulated per reporting
category.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import interface as iface_mod
from . import particles as part_mod
from . import poisson, rigid
from .grid import (GridSpec, ScalarField, VectorField, diff1, divergence,
                   gradient, smoothed_heaviside)

STAGE_SEQUENCE = [
    "stream_solve", "velocity", "rigid_couple", "assemble_rhs",
    "advect_particles", "advect_phi", "advance_bodies", "remesh",
    "diffuse", "rigid_reblend", "create_particles",
]

TIMER_CATEGORIES = [
    "stream_solve", "particles", "grid", "level_set",
    "rigid_coupling", "rigid_solver", "surface_tension", "other",
]


@dataclass
class StabilityReport:
    diffusion_limit: float
    advection_cfl: float
    dt_ok: bool


@dataclass
class SimulationState:
    spec: GridSpec
    particles: part_mod.ParticleSet
    omega: ScalarField | VectorField
    psi: ScalarField | VectorField
    u: VectorField
    iface: iface_mod.FluidInterface
    bodies: list[rigid.RigidBody]
    gravity: np.ndarray
    dt: float
    t: float = 0.0
    step_index: int = 0
    rk_order: int = 2
    creation_threshold_rel: float = 1e-5
    reinit_every: int = 10
    reinit_iterations: int = 20
    threads: int = 1
    deterministic: bool = True
    plan: poisson.PoissonPlan = None
    body_phis: list[ScalarField] = field(default_factory=list)
    coverage_mask: np.ndarray = None
    timers: dict = field(default_factory=lambda: {k: 0.0 for k in TIMER_CATEGORIES})
    stage_trace: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.gravity = np.asarray(self.gravity, dtype=np.float64)
        if self.plan is None:
            self.plan = poisson.PoissonPlan(self.spec)
        if self.coverage_mask is None:
            self.coverage_mask = np.zeros(self.spec.n, dtype=bool)
        if not self.body_phis:
            self.body_phis = [rigid.body_level_set(b, self.spec) for b in self.bodies]


def new_state(spec: GridSpec, iface: iface_mod.FluidInterface,
              bodies=(), gravity=None, dt=0.01, omega=None, **kwargs) -> SimulationState:
    """Build a consistent initial state; particles seeded from the vorticity."""
    if gravity is None:
        gravity = np.zeros(spec.dim)
    if omega is None:
        omega = ScalarField.zeros(spec) if spec.dim == 2 else VectorField.zeros(spec)
    psi = ScalarField.zeros(spec) if spec.dim == 2 else VectorField.zeros(spec)
    state = SimulationState(
        spec=spec, particles=part_mod.ParticleSet.empty(spec), omega=omega,
        psi=psi, u=VectorField.zeros(spec), iface=iface, bodies=list(bodies),
        gravity=gravity, dt=dt, **kwargs)
    state.particles = part_mod.create_particles(omega, state.creation_threshold_rel)
    state.coverage_mask = _particle_mask(state.particles, spec)
    return state


def _particle_mask(particles: part_mod.ParticleSet, spec: GridSpec) -> np.ndarray:
    """Node-occupancy mask for particles sitting exactly on grid nodes."""
    mask = np.zeros(spec.n, dtype=bool)
    if particles.count:
        idx = []
        for a in range(spec.dim):
            shift = 0.5 if spec.bc[a] == "dirichlet" else 0.0
            i = np.rint((particles.positions[:, a] - spec.origin[a]) / spec.h - shift)
            idx.append(np.mod(i.astype(np.int64), spec.n[a]))
        mask[tuple(idx)] = True
    return mask


def check_stability(state: SimulationState) -> StabilityReport:
    """Explicit-diffusion limit h^2/(2 dim nu_max) against the configured dt."""
    nu = iface_mod.viscosity_field(state.iface).data
    nu_max = float(nu.max())
    h = state.spec.h
    limit = np.inf if nu_max == 0 else h * h / (2.0 * state.spec.dim * nu_max)
    umax = max(float(np.max(np.abs(c))) for c in state.u.components)
    cfl = np.inf if umax == 0 else h / umax
    return StabilityReport(limit, cfl, state.dt <= limit)


def total_density(state: SimulationState) -> ScalarField:
    """Three-phase density: solids override the two-fluid blend."""
    rho = iface_mod.density_field(state.iface)
    eps = state.iface.epsilon
    data = rho.data
    for body, phi_s in zip(state.bodies, state.body_phis):
        Hs = smoothed_heaviside(phi_s.data / eps)
        data = body.density * Hs + data * (1.0 - Hs)
    return ScalarField(state.spec, data)


def _stretching(omega: VectorField, u: VectorField) -> VectorField:
    """(omega . grad) u, 3D only; identically zero in 2D."""
    spec = omega.spec
    comps = []
    for i in range(3):
        acc = np.zeros(spec.n)
        for a in range(3):
            acc += omega.components[a] * diff1(u.components[i], a, spec)
        comps.append(acc)
    return VectorField(spec, tuple(comps))


def _diffuse(omega, nu: np.ndarray, dt: float):
    """Explicit conservative step of div(nu grad omega)."""
    spec = omega.spec
    if isinstance(omega, ScalarField):
        flux = gradient(omega)
        flux = VectorField(spec, tuple(nu * c for c in flux.components))
        return ScalarField(spec, omega.data + dt * divergence(flux).data)
    comps = []
    for c in omega.components:
        flux = gradient(ScalarField(spec, c))
        flux = VectorField(spec, tuple(nu * f for f in flux.components))
        comps.append(c + dt * divergence(flux).data)
    return VectorField(spec, tuple(comps))


def _field_add(a, b):
    if isinstance(a, ScalarField):
        return ScalarField(a.spec, a.data + b.data)
    return VectorField(a.spec, tuple(x + y for x, y in zip(a.components, b.components)))


def _rhs_magnitude(rhs) -> np.ndarray:
    if isinstance(rhs, ScalarField):
        return np.abs(rhs.data)
    return np.sqrt(sum(c * c for c in rhs.components))


def _check_finite(field_like, stage: str) -> None:
    comps = (field_like.data,) if isinstance(field_like, ScalarField) else field_like.components
    for c in comps:
        if not np.all(np.isfinite(c)):
            raise FloatingPointError(f"non-finite values after stage '{stage}'")


def step(state: SimulationState) -> SimulationState:
    """Advance the state by one dt in place; returns the state."""
    report = check_stability(state)
    if not report.dt_ok:
        raise ValueError(
            f"dt={state.dt} exceeds the diffusion stability limit "
            f"{report.diffusion_limit:.6g}")
    spec = state.spec
    eps = state.iface.epsilon
    lam = 1.0 / state.dt
    timers = state.timers
    trace = state.stage_trace
    trace.clear()

    def tick():
        return time.perf_counter()

    # 1. stream function from vorticity
    t0 = tick()
    state.psi, _ = poisson.solve_stream(state.omega, state.plan)
    trace.append("stream_solve")
    # 2. velocity recovery
    u_tilde = poisson.velocity_from_stream(state.psi)
    trace.append("velocity")
    timers["stream_solve"] += tick() - t0
    _check_finite(u_tilde, "velocity")

    # 2b. rigid projection, penalization sources, velocity blending. Sources
    # are evaluated on the pre-blend (u_tilde, omega) snapshot: the bulk
    # relaxation and the slip sheet must see the same state or their
    # equilibrium drifts and the body bleeds momentum every step.
    t0 = tick()
    penal_sources = []
    u = u_tilde
    if state.bodies:
        rigid.check_no_overlap(state.body_phis, spec.h)
        for i, body in enumerate(state.bodies):
            U, omega_bar, Omega = rigid.project_rigid(u_tilde, state.omega,
                                                      state.body_phis[i], eps)
            body.U, body.Omega = U, Omega
            ur = rigid.rigid_velocity_field(body, spec)
            penal_sources.append(rigid.penalization_source(
                u_tilde, ur, state.omega, omega_bar,
                state.body_phis[i], eps, lam))
        for i, body in enumerate(state.bodies):
            u = rigid.blend_velocity(u, body, state.body_phis[i], eps)
    state.u = u
    trace.append("rigid_couple")
    timers["rigid_coupling"] += tick() - t0

    # 3. assemble the particle strength right-hand side on the grid
    t0 = tick()
    rho = total_density(state)
    rhs = iface_mod.gravity_curl(rho, state.gravity)
    if spec.dim == 3:
        rhs = _field_add(rhs, _stretching(state.omega, state.u))
    timers["grid"] += tick() - t0
    t0 = tick()
    if state.iface.tau != 0.0:
        rhs = _field_add(rhs, iface_mod.surface_tension_source(state.iface))
    timers["surface_tension"] += tick() - t0
    t0 = tick()
    for src in penal_sources:
        rhs = _field_add(rhs, src)
    _check_finite(rhs, "assemble_rhs")
    trace.append("assemble_rhs")
    timers["rigid_coupling"] += tick() - t0

    # 4+5. seed uncovered source nodes, interpolate, advance the particles
    t0 = tick()
    extra = (_rhs_magnitude(rhs) > 0.0) & ~state.coverage_mask
    if extra.any():
        seeded = part_mod.create_particles(state.omega, np.inf, extra_mask=extra)
        if state.particles.count:
            state.particles = part_mod.ParticleSet(
                np.concatenate([state.particles.positions, seeded.positions]),
                np.concatenate([state.particles.strengths, seeded.strengths]),
                state.particles.volume, spec.dim)
        else:
            state.particles = seeded

    def u_sampler(pos):
        return part_mod.interpolate_to_particles(state.u, pos, threads=state.threads)

    def rhs_sampler(pos):
        return part_mod.interpolate_to_particles(rhs, pos, threads=state.threads)

    advect = part_mod.advect_rk2 if state.rk_order == 2 else part_mod.advect_rk4
    state.particles = advect(state.particles, spec, u_sampler, rhs_sampler, state.dt)
    trace.append("advect_particles")
    timers["particles"] += tick() - t0

    # 5. level-set transport on the grid (+ periodic redistancing)
    t0 = tick()
    state.iface.phi = iface_mod.advect_phi_semi_lagrangian(state.iface.phi, state.u, state.dt)
    trace.append("advect_phi")
    phi_data = state.iface.phi.data
    has_interface = phi_data.min() < 0.0 < phi_data.max()
    if (state.reinit_every > 0 and has_interface
            and (state.step_index + 1) % state.reinit_every == 0):
        state.iface.phi = iface_mod.reinitialize(state.iface.phi, state.reinit_iterations)
        trace.append("reinitialize")
    timers["level_set"] += tick() - t0

    # 5b. rigid transforms advance; solid level sets re-evaluated analytically
    t0 = tick()
    for i, body in enumerate(state.bodies):
        state.bodies[i] = rigid.advance_body(body, body.U, body.Omega, state.dt)
        state.body_phis[i] = rigid.body_level_set(state.bodies[i], spec)
    trace.append("advance_bodies")
    timers["rigid_solver"] += tick() - t0

    # 6. particles back onto the grid
    t0 = tick()
    state.omega = part_mod.remesh(state.particles, spec)
    trace.append("remesh")
    timers["particles"] += tick() - t0
    _check_finite(state.omega, "remesh")

    # 7. explicit viscous step (viscous splitting)
    t0 = tick()
    nu = iface_mod.viscosity_field(state.iface).data
    state.omega = _diffuse(state.omega, nu, state.dt)
    trace.append("diffuse")
    timers["grid"] += tick() - t0
    _check_finite(state.omega, "diffuse")

    # 7b. pin saturated solid nodes at the mean vorticity with the advanced
    # pose: the fixed point of the bulk relaxation at nodes where H = 1. The
    # band is untouched; its sheet is the body's momentum store.
    t0 = tick()
    for i, body in enumerate(state.bodies):
        _, omega_bar, Omega = rigid.project_rigid(state.u, state.omega,
                                                  state.body_phis[i], eps)
        body.Omega = Omega
        state.omega = rigid.enforce_interior_vorticity(
            state.omega, body, state.body_phis[i], eps)
    trace.append("rigid_reblend")
    timers["rigid_solver"] += tick() - t0

    # 8. fresh particles where vorticity survives the threshold
    t0 = tick()
    state.particles = part_mod.create_particles(state.omega, state.creation_threshold_rel)
    state.coverage_mask = _particle_mask(state.particles, spec)
    trace.append("create_particles")
    timers["particles"] += tick() - t0

    state.step_index += 1
    state.t = state.step_index * state.dt
    return state


def circulation(state: SimulationState) -> float:
    hd = state.spec.h ** state.spec.dim
    if isinstance(state.omega, ScalarField):
        return float(state.omega.data.sum() * hd)
    return float(sum(c.sum() for c in state.omega.components) * hd)


def enstrophy(state: SimulationState) -> float:
    hd = state.spec.h ** state.spec.dim
    if isinstance(state.omega, ScalarField):
        return float((state.omega.data ** 2).sum() * hd)
    return float(sum((c ** 2).sum() for c in state.omega.components) * hd)


def liquid_volume(state: SimulationState) -> float:
    hd = state.spec.h ** state.spec.dim
    H = smoothed_heaviside(state.iface.phi.data / state.iface.epsilon)
    return float(H.sum() * hd)


def timing_report(state: SimulationState) -> dict[str, float]:
    """Percent of accumulated stage time per category; sums to 100."""
    total = sum(state.timers.values())
    if total == 0:
        return {k: 0.0 for k in TIMER_CATEGORIES}
    return {k: 100.0 * v / total for k, v in state.timers.items()}


def state_from_config(cfg) -> SimulationState:
    spec = cfg.grid_spec()
    return new_state(
        spec, cfg.fluid_interface(), bodies=cfg.rigid_bodies(),
        gravity=np.asarray(cfg.gravity), dt=cfg.dt, rk_order=cfg.rk_order,
        creation_threshold_rel=cfg.creation_threshold_rel,
        reinit_every=cfg.reinit_every, threads=cfg.threads,
        deterministic=cfg.deterministic)


def _diag_row(state: SimulationState, step_times=None) -> list:
    row = [state.step_index, state.t, state.particles.count,
           circulation(state), enstrophy(state), liquid_volume(state)]
    for body in state.bodies:
        row += list(body.center)
        row += [body.angle] if state.spec.dim == 2 else list(body.quat)
        row += list(body.U)
        row += [body.Omega] if state.spec.dim == 2 else list(np.asarray(body.Omega))
    if step_times is not None:
        row += [step_times[k] for k in TIMER_CATEGORIES]
    return row


def run(cfg, out_dir=None, observer=None):
    """Run a scene to its configured duration; returns (state, rows, header).

    Frames and diagnostics are written under `out_dir` (defaults to the scene's
    output directory). Per-stage timer columns are only emitted when the run is
    not in deterministic mode: wall-clock values are inherently nondeterministic
    and would break byte-identical diagnostics. `observer(state)` is called
    after every step.
    """
    from . import scene_io

    state = state_from_config(cfg)
    out = scene_io.ensure_dir(out_dir if out_dir is not None else cfg.out_dir)
    with_timers = not cfg.deterministic
    header = scene_io.diagnostics_header(cfg.dim, len(cfg.bodies), with_timers)
    rows = []
    n_steps = int(round(cfg.duration / cfg.dt))

    def dump(st):
        fields = {}
        for name in cfg.dump_fields:
            if name == "omega":
                fields["omega"] = st.omega
            elif name == "u":
                fields["u"] = st.u
            elif name == "phi":
                fields["phi"] = st.iface.phi
            elif name == "phi_s" and st.body_phis:
                data = st.body_phis[0].data
                for p in st.body_phis[1:]:
                    data = np.minimum(data, p.data)
                fields["phi_s"] = ScalarField(st.spec, data)
            elif name == "rho":
                fields["rho"] = total_density(st)
        scene_io.write_vtk(
            f"{out}/{scene_io.frame_filename(st.step_index)}", st.spec, fields)
        if cfg.dump_particles:
            scene_io.write_particles_csv(
                f"{out}/particles_{st.step_index:06d}.csv", st.particles)

    if cfg.dump_every > 0:
        dump(state)
    prev = dict(state.timers)
    for _ in range(n_steps):
        step(state)
        step_times = {k: state.timers[k] - prev[k] for k in TIMER_CATEGORIES}
        prev = dict(state.timers)
        rows.append(_diag_row(state, step_times if with_timers else None))
        if cfg.dump_every > 0 and state.step_index % cfg.dump_every == 0:
            dump(state)
        if observer is not None:
            observer(state)
    scene_io.write_diagnostics(rows, f"{out}/diagnostics.csv", header)
    report = timing_report(state)
    with open(f"{out}/timing_report.txt", "w") as fp:
        fp.write("stage timing breakdown (percent of accumulated stage time)\n")
        for k in TIMER_CATEGORIES:
            fp.write(f"{k:>16s}  {report[k]:7.2f} %\n")
        fp.write(f"{'total':>16s}  {sum(report.values()):7.2f} %\n")
    return state, rows, header
