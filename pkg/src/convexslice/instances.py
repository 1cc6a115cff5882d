"""Instance and result documents: parsing, generation, end-to-end runs.

An instance is a single JSON object with fields ``dimension``, ``mode``
("halfspace", "sphere", or "tangent"), ``bodies`` (list of ``{name,
vertices}``), ``alpha`` (or ``partition`` in tangent mode), and optional
``options`` overriding solver defaults.  Results are JSON objects that can
be re-verified against their instance by recomputing mass fractions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationFailed, SchemaError
from .geometry import Body, Halfspace, build_body, clipped_volume
from .halfspace import (
    SolveOptions,
    as_fraction_vector,
    solve,
    solve_tangent_partition,
)
from .measures import LiftedMeasure
from .separation import Family, check_well_separated
from .sphere import Sphere, solve_sphere

MODES = ("halfspace", "sphere", "tangent")
KINDS = ("separated_boxes", "random_triangles", "radial_squares")
MAX_GENERATION_ATTEMPTS = 10_000

_OPTION_KEYS = {
    "engine": str,
    "seed": int,
    "tol": float,
    "max_iterations": int,
    "multistart": int,
    "damping": float,
}


@dataclass(frozen=True)
class Instance:
    dimension: int
    mode: str
    names: tuple[str, ...]
    bodies: tuple[Body, ...]
    alpha: np.ndarray | None = None
    inside: tuple[int, ...] | None = None
    options: dict = field(default_factory=dict)

    @property
    def family(self) -> Family:
        return Family(self.bodies)

    def solve_options(self, **overrides) -> SolveOptions:
        merged = dict(self.options)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        kw = {}
        if "engine" in merged:
            kw["engine"] = merged["engine"]
        if "seed" in merged:
            kw["seed"] = int(merged["seed"])
        if "tol" in merged:
            kw["residual_tol"] = float(merged["tol"])
        if "max_iterations" in merged:
            kw["max_iterations"] = int(merged["max_iterations"])
        if "multistart" in merged:
            kw["multistart_count"] = int(merged["multistart"])
        if "damping" in merged:
            kw["damping"] = float(merged["damping"])
        try:
            return SolveOptions(**kw)
        except ValueError as exc:
            raise SchemaError(str(exc), field="options") from exc


@dataclass(frozen=True)
class Result:
    status: str
    mode: str
    dimension: int
    names: tuple[str, ...]
    halfspace: Halfspace | None = None
    second_halfspace: Halfspace | None = None
    sphere: Sphere | None = None
    per_body_fraction: tuple[float, ...] | None = None
    t_values: tuple[float, ...] | None = None
    orientation_det: float | None = None
    residual: float | None = None
    iterations: int | None = None
    margin: float | None = None
    engine: str | None = None
    seed: int | None = None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _require(cond: bool, message: str, field_name: str):
    if not cond:
        raise SchemaError(message, field=field_name)


def _parse_vertices(raw, dim: int, name: str) -> np.ndarray:
    _require(isinstance(raw, list) and len(raw) >= dim + 1,
             f"need at least {dim + 1} vertices", f"bodies.{name}.vertices")
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError("vertices must be numeric",
                          field=f"bodies.{name}.vertices") from exc
    _require(arr.ndim == 2 and arr.shape[1] == dim,
             f"vertices must be {dim}-dimensional points",
             f"bodies.{name}.vertices")
    _require(bool(np.isfinite(arr).all()), "vertices must be finite",
             f"bodies.{name}.vertices")
    return arr


def parse_instance(text: str) -> Instance:
    """Parse and validate an instance document; SchemaError on any defect."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", field="document") from exc
    _require(isinstance(doc, dict), "top level must be an object", "document")

    allowed = {"dimension", "mode", "bodies", "alpha", "partition", "options"}
    for key in doc:
        _require(key in allowed, f"unknown field {key!r}", key)

    dim = doc.get("dimension")
    _require(isinstance(dim, int) and 1 <= dim <= 4,
             "dimension must be an integer in 1..4", "dimension")
    mode = doc.get("mode")
    _require(mode in MODES, f"mode must be one of {MODES}", "mode")

    raw_bodies = doc.get("bodies")
    _require(isinstance(raw_bodies, list) and raw_bodies, "bodies required",
             "bodies")
    expected = dim + 1 if mode == "sphere" else dim
    _require(len(raw_bodies) == expected,
             f"{mode} mode in dimension {dim} needs {expected} bodies",
             "bodies")
    names, bodies = [], []
    for i, rb in enumerate(raw_bodies):
        _require(isinstance(rb, dict) and set(rb) <= {"name", "vertices"},
                 "each body is {name, vertices}", f"bodies[{i}]")
        name = rb.get("name", f"K{i + 1}")
        _require(isinstance(name, str) and name, "body name must be a string",
                 f"bodies[{i}].name")
        _require(name not in names, f"duplicate body name {name!r}",
                 f"bodies[{i}].name")
        names.append(name)
        bodies.append(build_body(_parse_vertices(rb.get("vertices"), dim, name)))

    alpha = None
    inside = None
    if mode == "tangent":
        _require("alpha" not in doc, "tangent mode takes a partition, not alpha",
                 "alpha")
        part = doc.get("partition")
        _require(isinstance(part, dict) and set(part) == {"inside"},
                 'partition must be {"inside": [names]}', "partition")
        raw_in = part["inside"]
        _require(isinstance(raw_in, list) and raw_in, "inside must be nonempty",
                 "partition.inside")
        idx = []
        for nm in raw_in:
            _require(nm in names, f"unknown body name {nm!r}", "partition.inside")
            idx.append(names.index(nm))
        _require(len(set(idx)) == len(idx) and len(idx) < len(names),
                 "inside must be a proper nonempty subset", "partition.inside")
        inside = tuple(sorted(idx))
    else:
        raw_alpha = doc.get("alpha")
        _require("partition" not in doc, f"{mode} mode takes alpha", "partition")
        _require(isinstance(raw_alpha, list), "alpha must be a list", "alpha")
        try:
            alpha = as_fraction_vector(raw_alpha, len(bodies))
        except ValueError as exc:
            raise SchemaError(str(exc), field="alpha") from exc

    options = doc.get("options", {})
    _require(isinstance(options, dict), "options must be an object", "options")
    for key, val in options.items():
        _require(key in _OPTION_KEYS, f"unknown option {key!r}",
                 f"options.{key}")
        want = _OPTION_KEYS[key]
        ok = isinstance(val, str) if want is str else (
            isinstance(val, (int, float)) and not isinstance(val, bool)
            and math.isfinite(float(val)))
        _require(ok, f"option {key!r} has the wrong type", f"options.{key}")

    return Instance(dimension=dim, mode=mode, names=tuple(names),
                    bodies=tuple(bodies), alpha=alpha, inside=inside,
                    options=dict(options))


def serialize_instance(inst: Instance) -> str:
    doc: dict = {
        "dimension": inst.dimension,
        "mode": inst.mode,
        "bodies": [{"name": nm, "vertices": body.vertices.tolist()}
                   for nm, body in zip(inst.names, inst.bodies)],
    }
    if inst.mode == "tangent":
        doc["partition"] = {"inside": [inst.names[i] for i in inst.inside]}
    else:
        doc["alpha"] = list(map(float, inst.alpha))
    if inst.options:
        doc["options"] = inst.options
    return json.dumps(doc, indent=2) + "\n"


def _halfspace_doc(hs: Halfspace) -> dict:
    return {"normal": hs.normal.tolist(), "offset": float(hs.offset)}


def serialize_result(res: Result) -> str:
    doc: dict = {"status": res.status, "mode": res.mode,
                 "dimension": res.dimension, "bodies": list(res.names)}
    if res.halfspace is not None:
        doc["halfspace"] = _halfspace_doc(res.halfspace)
    if res.second_halfspace is not None:
        doc["second_halfspace"] = _halfspace_doc(res.second_halfspace)
    if res.sphere is not None:
        doc["sphere"] = {"center": res.sphere.center.tolist(),
                         "radius": float(res.sphere.radius)}
    for key in ("per_body_fraction", "t_values"):
        val = getattr(res, key)
        if val is not None:
            doc[key] = list(map(float, val))
    for key in ("orientation_det", "residual", "iterations", "margin",
                "engine", "seed"):
        val = getattr(res, key)
        if val is not None:
            doc[key] = val
    return json.dumps(doc, indent=2) + "\n"


def parse_result(text: str) -> Result:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", field="document") from exc
    _require(isinstance(doc, dict), "top level must be an object", "document")
    hs = doc.get("halfspace")
    second = doc.get("second_halfspace")
    sph = doc.get("sphere")
    return Result(
        status=doc.get("status", "ok"),
        mode=doc.get("mode", "halfspace"),
        dimension=int(doc.get("dimension", 0)),
        names=tuple(doc.get("bodies", ())),
        halfspace=Halfspace(hs["normal"], hs["offset"]) if hs else None,
        second_halfspace=(Halfspace(second["normal"], second["offset"])
                          if second else None),
        sphere=Sphere(np.asarray(sph["center"], dtype=float), sph["radius"])
        if sph else None,
        per_body_fraction=tuple(doc.get("per_body_fraction", ())) or None,
        t_values=tuple(doc.get("t_values", ())) or None,
        orientation_det=doc.get("orientation_det"),
        residual=doc.get("residual"),
        iterations=doc.get("iterations"),
        margin=doc.get("margin"),
        engine=doc.get("engine"),
        seed=doc.get("seed"),
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _corner_frame(d: int, count: int, spread: float) -> np.ndarray:
    frame = np.vstack([np.zeros(d), np.eye(d) * spread])
    reps = -(-count // len(frame))
    return np.tile(frame, (reps, 1))[:count]


def _box_vertices(center: np.ndarray, half: np.ndarray) -> np.ndarray:
    d = len(center)
    corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T
    return center + corners * half


def generate_instance(d: int, kind: str, seed: int, mode: str = "halfspace",
                      count: int | None = None) -> Instance:
    """Deterministic well-separated instance for the given kind and seed."""
    if kind not in KINDS:
        raise SchemaError(f"unknown kind {kind!r}, expected one of {KINDS}",
                          field="kind")
    if not 1 <= d <= 4:
        raise SchemaError("dimension must be in 1..4", field="dimension")
    if mode not in ("halfspace", "sphere"):
        raise SchemaError("generator modes are halfspace and sphere",
                          field="mode")

    if kind == "radial_squares":
        if d != 2:
            raise SchemaError("radial_squares is a planar configuration",
                              field="dimension")
        bodies = []
        for deg in (90.0, 210.0, 330.0):
            th = math.radians(deg)
            u = np.array([math.cos(th), math.sin(th)])
            w = np.array([-u[1], u[0]])
            c = 3.0 * u
            bodies.append(build_body([c + 0.5 * sx * u + 0.5 * sy * w
                                      for sx in (-1, 1) for sy in (-1, 1)]))
        return Instance(dimension=2, mode="sphere",
                        names=("K1", "K2", "K3"), bodies=tuple(bodies),
                        alpha=np.array([0.5, 0.5, 0.5]),
                        options={"seed": int(seed)})

    count = (d + 1 if mode == "sphere" else d) if count is None else count
    rng = np.random.default_rng(seed)
    spread = 4.0
    frame = _corner_frame(d, count, spread)
    for _ in range(MAX_GENERATION_ATTEMPTS):
        bodies = []
        try:
            for i in range(count):
                center = frame[i] + rng.uniform(-0.3, 0.3, d)
                if kind == "separated_boxes":
                    half = rng.uniform(0.25, 0.6, d)
                    bodies.append(build_body(_box_vertices(center, half)))
                else:  # random_triangles: simplices around the frame corners
                    pts = center + rng.uniform(-0.8, 0.8, (d + 1, d))
                    bodies.append(build_body(pts))
        except Exception:
            continue  # degenerate sample: retry
        fam = Family(tuple(bodies))
        if check_well_separated(fam).ok:
            alpha = rng.uniform(0.05, 0.95, count)
            return Instance(dimension=d, mode=mode,
                            names=tuple(f"K{i + 1}" for i in range(count)),
                            bodies=tuple(bodies), alpha=alpha,
                            options={"seed": int(seed)})
    raise GenerationFailed(
        f"no well-separated {kind} family in {MAX_GENERATION_ATTEMPTS} attempts")


# ---------------------------------------------------------------------------
# End-to-end runs and verification
# ---------------------------------------------------------------------------

def run_instance(inst: Instance, **option_overrides) -> Result:
    """Solve an instance document and package the outcome as a Result."""
    opts = inst.solve_options(**option_overrides)
    margin = float(check_well_separated(inst.family).margin)
    common = dict(mode=inst.mode, dimension=inst.dimension, names=inst.names,
                  margin=margin, engine=opts.engine, seed=opts.seed)
    if inst.mode == "halfspace":
        rep = solve(inst.family, None, inst.alpha, opts)
        return Result(status="ok", halfspace=rep.halfspace,
                      per_body_fraction=tuple(rep.per_body_fraction),
                      t_values=tuple(rep.t_values),
                      orientation_det=float(rep.orientation_det),
                      residual=float(rep.residual),
                      iterations=int(rep.iterations), **common)
    if inst.mode == "sphere":
        sphere, rep = solve_sphere(inst.family, inst.alpha, opts,
                                   seed=opts.seed)
        fractions = tuple(
            LiftedMeasure(b).ball_mass(sphere.center, sphere.radius) / b.volume
            for b in inst.bodies)
        return Result(status="ok", sphere=sphere,
                      halfspace=rep.halfspace,
                      per_body_fraction=fractions,
                      t_values=tuple(rep.t_values),
                      orientation_det=float(rep.orientation_det),
                      residual=float(rep.residual),
                      iterations=int(rep.iterations), **common)
    h1, h2 = solve_tangent_partition(inst.family, inst.inside, opts)
    return Result(status="ok", halfspace=h1, second_halfspace=h2, **common)


def verify_result(inst: Instance, res: Result,
                  tol: float = 1e-9) -> tuple[bool, float]:
    """Recompute the fractions a result claims; return (ok, max error)."""
    if inst.mode == "halfspace":
        hs = res.halfspace
        got = np.array([clipped_volume(b, hs.normal, hs.offset) / b.volume
                        for b in inst.bodies])
        err = float(np.abs(got - np.asarray(res.per_body_fraction)).max())
        return err <= tol, err
    if inst.mode == "sphere":
        errs = []
        for body, stated in zip(inst.bodies, res.per_body_fraction):
            mu = LiftedMeasure(body)
            got = mu.ball_mass(res.sphere.center, res.sphere.radius) / mu.total_mass
            errs.append(abs(got - stated))
            tol = max(tol, 10.0 * mu.mass_error_bound() / mu.total_mass)
        err = float(max(errs))
        return err <= tol, err
    # tangent: all vertices on the prescribed sides of both lines
    err = 0.0
    for hs, sign_inside in ((res.halfspace, 1.0), (res.second_halfspace, -1.0)):
        for i, body in enumerate(inst.bodies):
            side = body.vertices @ hs.normal - hs.offset
            inside = (i in inst.inside) if sign_inside > 0 else (i not in inst.inside)
            err = max(err, float(side.max()) if inside else float(-side.min()))
    return err <= tol, err
