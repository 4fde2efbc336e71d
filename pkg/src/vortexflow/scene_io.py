"""Scene files, frame dumps and diagnostics.

Scene format: sectioned ``key = value`` text (sections: domain, fluids,
gravity, body.N, numerics, output), ``#`` comments, versioned by a top-level
``format = 1`` line. Frames are legacy ASCII VTK STRUCTURED_POINTS files with
float64 values printed to 17 significant digits (lossless round trip), points
listed x-fastest. Diagnostics are CSV with a fixed, versioned header.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, ScalarField, VectorField
from .interface import FluidInterface
from .rigid import Ball, Box, RigidBody

FORMAT_VERSION = 1


@dataclass
class PhiPrimitive:
    """Analytic initial level set: negative where fluid 1 lives."""

    kind: str                      # none | halfspace | ball | box | column
    params: tuple[float, ...] = ()
    axis: int = 0

    def evaluate(self, spec: GridSpec) -> ScalarField:
        coords = spec.node_coords()
        if self.kind == "none":
            return ScalarField(spec, np.full(spec.n, -1.0))
        if self.kind == "halfspace":
            return ScalarField(spec, coords[self.axis] - self.params[0])
        if self.kind == "ball":
            c = self.params[:spec.dim]
            r = self.params[spec.dim]
            d = sum((coords[a] - c[a]) ** 2 for a in range(spec.dim))
            return ScalarField(spec, np.sqrt(d) - r)
        if self.kind == "box":
            c = self.params[:spec.dim]
            he = self.params[spec.dim:2 * spec.dim]
            q = [np.abs(coords[a] - c[a]) - he[a] for a in range(spec.dim)]
            outside = np.sqrt(sum(np.maximum(x, 0.0) ** 2 for x in q))
            inside = np.minimum(np.maximum.reduce(q), 0.0)
            return ScalarField(spec, outside + inside)
        if self.kind == "column":
            lo, hi = self.params
            x = coords[self.axis]
            return ScalarField(spec, np.maximum(lo - x, x - hi))
        raise ValueError(f"unknown phi primitive '{self.kind}'")


@dataclass
class BodyConfig:
    shape_kind: str                # ball | box
    shape_params: tuple[float, ...]
    density: float
    center: tuple[float, ...]
    angle: float = 0.0


@dataclass
class SceneConfig:
    dim: int
    n: tuple[int, ...]
    extent: tuple[float, ...]
    bc: tuple[str, ...]
    rho1: float = 1.0
    rho2: float = 1.0
    nu1: float = 0.0
    nu2: float = 0.0
    tau: float = 0.0
    epsilon_factor: float = 2.0
    phi: PhiPrimitive = field(default_factory=lambda: PhiPrimitive("none"))
    gravity: tuple[float, ...] = None
    bodies: list[BodyConfig] = field(default_factory=list)
    dt: float = 0.01
    duration: float = 1.0
    rk_order: int = 2
    creation_threshold_rel: float = 1e-5
    reinit_every: int = 10
    deterministic: bool = True
    threads: int = 1
    out_dir: str = "out"
    dump_every: int = 0
    dump_fields: tuple[str, ...] = ("omega", "u", "phi")
    dump_particles: bool = False

    def __post_init__(self):
        if self.gravity is None:
            self.gravity = (0.0,) * self.dim
        hs = [e / ni for e, ni in zip(self.extent, self.n)]
        if max(hs) - min(hs) > 1e-12 * max(hs):
            raise ValueError(f"cells must be square/cubic; extent/n gives spacings {hs}")
        limit = self.diffusion_limit()
        if self.dt > limit:
            raise ValueError(
                f"dt={self.dt} violates the diffusion stability limit {limit:.6g} "
                f"(h^2 / (2*dim*nu_max))")

    @property
    def h(self) -> float:
        return self.extent[0] / self.n[0]

    def diffusion_limit(self) -> float:
        nu_max = max(self.nu1, self.nu2)
        if nu_max == 0:
            return np.inf
        return self.h ** 2 / (2.0 * self.dim * nu_max)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.dim, self.n, self.h, origin=(0.0,) * self.dim, bc=self.bc)

    def fluid_interface(self) -> FluidInterface:
        spec = self.grid_spec()
        return FluidInterface(self.phi.evaluate(spec), self.rho1, self.rho2,
                              self.nu1, self.nu2, self.tau,
                              epsilon=self.epsilon_factor * self.h)

    def rigid_bodies(self) -> list[RigidBody]:
        out = []
        for b in self.bodies:
            if b.shape_kind == "ball":
                shape = Ball(b.shape_params[0])
            elif b.shape_kind == "box":
                shape = Box(tuple(b.shape_params))
            else:
                raise ValueError(f"unknown body shape '{b.shape_kind}'")
            out.append(RigidBody(shape, b.density, np.asarray(b.center), self.dim,
                                 angle=b.angle))
        return out


_AXES = {"x": 0, "y": 1, "z": 2}

_KNOWN_KEYS = {
    "domain": {"dim", "n", "extent", "bc"},
    "fluids": {"rho1", "rho2", "nu1", "nu2", "tau", "epsilon_factor", "phi"},
    "gravity": {"g"},
    "body": {"shape", "density", "center", "angle"},
    "numerics": {"dt", "duration", "rk_order", "creation_threshold_rel",
                 "reinit_every", "deterministic", "threads"},
    "output": {"directory", "dump_every", "fields", "particles"},
}


def _parse_sections(text: str) -> tuple[dict, dict]:
    top = {}
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ValueError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        target = top if current is None else sections[current]
        if key in target:
            raise ValueError(f"line {lineno}: duplicate key '{key}'")
        target[key] = value
    return top, sections


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split())


def _parse_phi(value: str, dim: int) -> PhiPrimitive:
    parts = value.split()
    kind = parts[0]
    if kind == "none":
        return PhiPrimitive("none")
    if kind == "halfspace":
        return PhiPrimitive("halfspace", (float(parts[2]),), _AXES[parts[1]])
    if kind in ("ball", "circle", "sphere"):
        vals = tuple(float(v) for v in parts[1:])
        if len(vals) != dim + 1:
            raise ValueError(f"phi ball needs {dim} center values and a radius")
        return PhiPrimitive("ball", vals)
    if kind == "box":
        vals = tuple(float(v) for v in parts[1:])
        if len(vals) != 2 * dim:
            raise ValueError(f"phi box needs {dim} center and {dim} half-extent values")
        return PhiPrimitive("box", vals)
    if kind == "column":
        return PhiPrimitive("column", (float(parts[2]), float(parts[3])), _AXES[parts[1]])
    raise ValueError(f"unknown phi primitive '{kind}'")


def parse_scene(text: str) -> SceneConfig:
    top, sections = _parse_sections(text)
    unknown_top = set(top) - {"format"}
    if unknown_top:
        raise ValueError(f"unknown top-level key {sorted(unknown_top)}")
    if int(top.get("format", "1")) != FORMAT_VERSION:
        raise ValueError(f"unsupported scene format {top.get('format')}")
    for name, content in sections.items():
        base = "body" if name.startswith("body.") else name
        if base not in _KNOWN_KEYS:
            raise ValueError(f"unknown section [{name}]")
        bad = set(content) - _KNOWN_KEYS[base]
        if bad:
            raise ValueError(f"unknown key {sorted(bad)} in section [{name}]")

    dom = sections.get("domain")
    if dom is None or "dim" not in dom or "n" not in dom or "extent" not in dom:
        raise ValueError("section [domain] with dim, n and extent is required")
    dim = int(dom["dim"])
    n = tuple(int(v) for v in dom["n"].split())
    extent = _floats(dom["extent"])
    bc = tuple(dom.get("bc", " ".join(["periodic"] * dim)).split())

    kwargs = {}
    fl = sections.get("fluids", {})
    for key in ("rho1", "rho2", "nu1", "nu2", "tau", "epsilon_factor"):
        if key in fl:
            kwargs[key] = float(fl[key])
    if "phi" in fl:
        kwargs["phi"] = _parse_phi(fl["phi"], dim)
    if "gravity" in sections and "g" in sections["gravity"]:
        g = _floats(sections["gravity"]["g"])
        if len(g) != dim:
            raise ValueError(f"gravity needs {dim} components")
        kwargs["gravity"] = g

    bodies = []
    body_names = sorted((s for s in sections if s.startswith("body.")),
                        key=lambda s: int(s.split(".", 1)[1]))
    for name in body_names:
        b = sections[name]
        for req in ("shape", "density", "center"):
            if req not in b:
                raise ValueError(f"section [{name}] missing '{req}'")
        shape_parts = b["shape"].split()
        bodies.append(BodyConfig(
            shape_kind={"circle": "ball", "sphere": "ball", "disk": "ball"}.get(
                shape_parts[0], shape_parts[0]),
            shape_params=tuple(float(v) for v in shape_parts[1:]),
            density=float(b["density"]),
            center=_floats(b["center"]),
            angle=float(b.get("angle", 0.0))))
    kwargs["bodies"] = bodies

    num = sections.get("numerics", {})
    for key, conv in (("dt", float), ("duration", float), ("rk_order", int),
                      ("creation_threshold_rel", float), ("reinit_every", int),
                      ("threads", int)):
        if key in num:
            kwargs[key] = conv(num[key])
    if "deterministic" in num:
        kwargs["deterministic"] = num["deterministic"].lower() in ("true", "1", "yes")

    out = sections.get("output", {})
    if "directory" in out:
        kwargs["out_dir"] = out["directory"]
    if "dump_every" in out:
        kwargs["dump_every"] = int(out["dump_every"])
    if "fields" in out:
        kwargs["dump_fields"] = tuple(out["fields"].split())
    if "particles" in out:
        kwargs["dump_particles"] = out["particles"].lower() in ("true", "1", "yes")

    return SceneConfig(dim=dim, n=n, extent=extent, bc=bc, **kwargs)


def print_scene(cfg: SceneConfig) -> str:
    """Canonical serializer; parse(print(cfg)) reproduces cfg."""
    lines = [f"format = {FORMAT_VERSION}", ""]
    lines += ["[domain]",
              f"dim = {cfg.dim}",
              "n = " + " ".join(str(v) for v in cfg.n),
              "extent = " + " ".join(f"{v:.17g}" for v in cfg.extent),
              "bc = " + " ".join(cfg.bc), ""]
    phi = cfg.phi
    if phi.kind == "none":
        phi_str = "none"
    elif phi.kind == "halfspace":
        phi_str = f"halfspace {'xyz'[phi.axis]} {phi.params[0]:.17g}"
    elif phi.kind == "column":
        phi_str = f"column {'xyz'[phi.axis]} {phi.params[0]:.17g} {phi.params[1]:.17g}"
    else:
        phi_str = phi.kind + " " + " ".join(f"{v:.17g}" for v in phi.params)
    lines += ["[fluids]",
              f"rho1 = {cfg.rho1:.17g}", f"rho2 = {cfg.rho2:.17g}",
              f"nu1 = {cfg.nu1:.17g}", f"nu2 = {cfg.nu2:.17g}",
              f"tau = {cfg.tau:.17g}", f"epsilon_factor = {cfg.epsilon_factor:.17g}",
              f"phi = {phi_str}", ""]
    lines += ["[gravity]", "g = " + " ".join(f"{v:.17g}" for v in cfg.gravity), ""]
    for i, b in enumerate(cfg.bodies, 1):
        lines += [f"[body.{i}]",
                  f"shape = {b.shape_kind} " + " ".join(f"{v:.17g}" for v in b.shape_params),
                  f"density = {b.density:.17g}",
                  "center = " + " ".join(f"{v:.17g}" for v in b.center),
                  f"angle = {b.angle:.17g}", ""]
    lines += ["[numerics]",
              f"dt = {cfg.dt:.17g}", f"duration = {cfg.duration:.17g}",
              f"rk_order = {cfg.rk_order}",
              f"creation_threshold_rel = {cfg.creation_threshold_rel:.17g}",
              f"reinit_every = {cfg.reinit_every}",
              f"deterministic = {str(cfg.deterministic).lower()}",
              f"threads = {cfg.threads}", ""]
    lines += ["[output]",
              f"directory = {cfg.out_dir}",
              f"dump_every = {cfg.dump_every}",
              "fields = " + " ".join(cfg.dump_fields),
              f"particles = {str(cfg.dump_particles).lower()}", ""]
    return "\n".join(lines)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_vtk(path: str, spec: GridSpec, fields: dict) -> None:
    """Legacy ASCII STRUCTURED_POINTS dump, one record per line, x-fastest."""
    nx = spec.n + (1,) * (3 - spec.dim)
    origin = spec.origin + (0.0,) * (3 - spec.dim)
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 3.0\n")
        fp.write("vortexflow frame\n")
        fp.write("ASCII\n")
        fp.write("DATASET STRUCTURED_POINTS\n")
        fp.write(f"DIMENSIONS {nx[0]} {nx[1]} {nx[2]}\n")
        fp.write(f"ORIGIN {_fmt(origin[0])} {_fmt(origin[1])} {_fmt(origin[2])}\n")
        fp.write(f"SPACING {_fmt(spec.h)} {_fmt(spec.h)} {_fmt(spec.h)}\n")
        fp.write(f"POINT_DATA {spec.num_nodes}\n")
        for name, fld in fields.items():
            if isinstance(fld, ScalarField):
                fp.write(f"SCALARS {name} double 1\n")
                fp.write("LOOKUP_TABLE default\n")
                for v in fld.data.flatten(order="F"):
                    fp.write(_fmt(v) + "\n")
            else:
                fp.write(f"VECTORS {name} double\n")
                comps = [c.flatten(order="F") for c in fld.components]
                while len(comps) < 3:
                    comps.append(np.zeros(spec.num_nodes))
                for vx, vy, vz in zip(*comps):
                    fp.write(f"{_fmt(vx)} {_fmt(vy)} {_fmt(vz)}\n")


def read_vtk(path: str) -> tuple[GridSpec, dict]:
    """Parse a dump written by :func:`write_vtk` back into fields."""
    with open(path) as fp:
        lines = [ln.rstrip("\n") for ln in fp]
    dims = tuple(int(v) for v in lines[4].split()[1:])
    origin = tuple(float(v) for v in lines[5].split()[1:])
    spacing = float(lines[6].split()[1])
    npoints = int(lines[7].split()[1])
    dim = 2 if dims[2] == 1 else 3
    spec = GridSpec(dim, dims[:dim], spacing, origin=origin[:dim])
    fields = {}
    i = 8
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] == "SCALARS":
            name = parts[1]
            vals = np.array([float(lines[j]) for j in range(i + 2, i + 2 + npoints)])
            fields[name] = ScalarField(spec, vals.reshape(dims[:dim], order="F"))
            i += 2 + npoints
        elif parts[0] == "VECTORS":
            name = parts[1]
            rows = np.array([[float(v) for v in lines[j].split()]
                             for j in range(i + 1, i + 1 + npoints)])
            comps = tuple(rows[:, c].reshape(dims[:dim], order="F") for c in range(dim))
            fields[name] = VectorField(spec, comps)
            i += 1 + npoints
        else:
            raise ValueError(f"unexpected record '{lines[i]}' in {path}")
    return spec, fields


def frame_filename(step: int) -> str:
    return f"frame_{step:06d}.vtk"


def write_particles_csv(path: str, particles) -> None:
    dim = particles.dim
    header = ",".join(["x", "y", "z"][:dim] + (["wx", "wy", "wz"] if dim == 3 else ["wx"]))
    with open(path, "w") as fp:
        fp.write(header + "\n")
        strengths = particles.strengths.reshape(particles.count, -1)
        for p in range(particles.count):
            row = [_fmt(v) for v in particles.positions[p]] + \
                  [_fmt(v) for v in strengths[p]]
            fp.write(",".join(row) + "\n")


DIAG_VERSION = 1


def diagnostics_header(dim: int, n_bodies: int, with_timers: bool = True) -> list[str]:
    cols = ["step", "t", "n_particles", "circulation", "enstrophy", "liquid_volume"]
    for i in range(1, n_bodies + 1):
        ax = ["x", "y", "z"][:dim]
        cols += [f"body{i}_{a}" for a in ax]
        cols += [f"body{i}_angle"] if dim == 2 else [f"body{i}_q{c}" for c in "wxyz"]
        cols += [f"body{i}_U{a}" for a in ax]
        cols += [f"body{i}_Omega"] if dim == 2 else [f"body{i}_Omega{a}" for a in "xyz"]
    if with_timers:
        from .solver import TIMER_CATEGORIES
        cols += [f"time_{k}" for k in TIMER_CATEGORIES]
    return cols


def write_diagnostics(rows: list[list], path: str, header: list[str]) -> None:
    with open(path, "w") as fp:
        fp.write("# diagnostics v%d\n" % DIAG_VERSION)
        fp.write(",".join(header) + "\n")
        for row in rows:
            fp.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
