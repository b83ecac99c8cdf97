"""Scenario documents: YAML files naming surfaces, curves, maps and checks.

Numeric fields accept plain numbers or constant DSL text such as ``"2*pi"``.
Every problem found while loading raises :class:`ScenarioError` with a path
into the document.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from darboux.expr import ExprError, evaluate, parse
from darboux.geom import ASSERT_UNIT_SPEED, REPARAMETRIZE, CurveOnSurface, SurfacePatch
from darboux.surfmap import KINDS, SurfaceCorrespondence

THEOREM_IDS = ("T3.1", "T3.2", "T3.3", "T3.4", "T4.1", "T4.2", "T4.3", "T4.4")
CHECK_IDS = ("frames", "metric-identities", "rectifying", "map", "conformal-partials") + THEOREM_IDS
MIN_SAMPLES = 8
DEMO_PREFIX = "demo:"


class ScenarioError(ValueError):
    """Configuration problem; ``path`` locates it inside the document."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


_number = {"oneOf": [{"type": "number"}, {"type": "string", "minLength": 1}]}
_range = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}
_name_map = lambda item: {  # noqa: E731
    "type": "object",
    "propertyNames": {"pattern": r"^[A-Za-z_][A-Za-z0-9_.-]*$"},
    "additionalProperties": item,
}

SCHEMA = {
    "type": "object",
    "required": ["surfaces", "checks"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "surfaces": _name_map(
            {
                "type": "object",
                "required": ["x", "y", "z", "u", "v"],
                "additionalProperties": False,
                "properties": {
                    "x": {"type": "string"},
                    "y": {"type": "string"},
                    "z": {"type": "string"},
                    "u": _range,
                    "v": _range,
                },
            }
        ),
        "curves": _name_map(
            {
                "type": "object",
                "required": ["surface", "u", "v", "t"],
                "additionalProperties": False,
                "properties": {
                    "surface": {"type": "string"},
                    "u": {"type": "string"},
                    "v": {"type": "string"},
                    "t": _range,
                    "samples": {"type": "integer", "minimum": MIN_SAMPLES},
                    "mode": {"enum": [REPARAMETRIZE, ASSERT_UNIT_SPEED]},
                },
            }
        ),
        "maps": _name_map(
            {
                "type": "object",
                "required": ["source", "target"],
                "additionalProperties": False,
                "properties": {
                    "source": {"type": "string"},
                    "target": {"type": "string"},
                    "rho": {"type": "string"},
                },
            }
        ),
        "checks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["check"],
                "additionalProperties": False,
                "properties": {
                    "check": {"enum": list(CHECK_IDS)},
                    "surface": {"type": "string"},
                    "curve": {"type": "string"},
                    "map": {"type": "string"},
                    "tol": {"type": "number", "exclusiveMinimum": 0},
                    "expect": {"type": "string"},
                    "draws": {"type": "integer", "minimum": 0},
                    "tangents": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    },
                },
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "csv_dir": {"type": "string"}},
        },
    },
}

# which references each check needs
_NEEDS = {
    "frames": ("curve",),
    "metric-identities": ("surface",),
    "rectifying": ("curve",),
    "map": ("map",),
    "conformal-partials": ("map",),
    **{tid: ("map", "curve") for tid in THEOREM_IDS},
}
_EXPECT = {
    "rectifying": ("rectifying", "not-rectifying"),
    "map": KINDS,
}


@dataclass(frozen=True)
class CheckSpec:
    index: int
    check: str
    surface: str | None = None
    curve: str | None = None
    map: str | None = None
    tol: float | None = None
    expect: str | None = None
    draws: int | None = None
    tangents: tuple | None = None

    @property
    def label(self) -> str:
        refs = [r for r in (self.surface, self.map, self.curve) if r]
        return f"{self.check}[{','.join(refs)}]"


@dataclass
class Scenario:
    name: str
    description: str
    seed: int
    surfaces: dict
    curves: dict
    curve_surface: dict
    maps: dict
    checks: list
    outputs: dict
    digest: str
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)


def _number_value(value: Any, path: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        x = float(value)
    else:
        try:
            x = float(evaluate(parse(value), {}))
        except ExprError as exc:
            raise ScenarioError(f"bad number: {exc}", path) from None
    if not math.isfinite(x):
        raise ScenarioError("number must be finite", path)
    return x


def _range_value(values, path: str) -> tuple[float, float]:
    a = _number_value(values[0], f"{path}[0]")
    b = _number_value(values[1], f"{path}[1]")
    if not a < b:
        raise ScenarioError(f"range must be increasing, got [{a!r}, {b!r}]", path)
    return a, b


def _expr_guard(path: str, build):
    try:
        return build()
    except ExprError as exc:
        raise ScenarioError(str(exc), path) from None


def load_text(text: str, source: str = "<string>") -> Scenario:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}", source) from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a mapping", source)
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(raw), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise ScenarioError(err.message, where)

    surfaces = {}
    for name, s in raw["surfaces"].items():
        p = f"surfaces/{name}"
        u = _range_value(s["u"], f"{p}/u")
        v = _range_value(s["v"], f"{p}/v")
        surfaces[name] = _expr_guard(p, lambda: SurfacePatch.from_strings(s["x"], s["y"], s["z"], u, v, name))

    curves, curve_surface = {}, {}
    for name, c in (raw.get("curves") or {}).items():
        p = f"curves/{name}"
        if c["surface"] not in surfaces:
            raise ScenarioError(f"unknown surface {c['surface']!r}", f"{p}/surface")
        t0, t1 = _range_value(c["t"], f"{p}/t")
        curves[name] = _expr_guard(
            p,
            lambda: CurveOnSurface.from_strings(
                c["u"], c["v"], t0, t1, c.get("mode", REPARAMETRIZE), c.get("samples", 16), name
            ),
        )
        curve_surface[name] = c["surface"]

    maps = {}
    for name, m in (raw.get("maps") or {}).items():
        p = f"maps/{name}"
        for key in ("source", "target"):
            if m[key] not in surfaces:
                raise ScenarioError(f"unknown surface {m[key]!r}", f"{p}/{key}")
        maps[name] = _expr_guard(
            f"{p}/rho",
            lambda: SurfaceCorrespondence.build(surfaces[m["source"]], surfaces[m["target"]], m.get("rho"), name),
        )

    tables = {"surface": surfaces, "curve": curves, "map": maps}
    checks = []
    for i, ch in enumerate(raw["checks"]):
        p = f"checks/{i}"
        kind = ch["check"]
        for ref in _NEEDS[kind]:
            if ref not in ch:
                raise ScenarioError(f"check {kind} needs a {ref!r} reference", p)
        for ref in ("surface", "curve", "map"):
            if ref in ch and ch[ref] not in tables[ref]:
                raise ScenarioError(f"unknown {ref} {ch[ref]!r}", f"{p}/{ref}")
        if "map" in ch and "curve" in ch:
            src = raw["maps"][ch["map"]]["source"]
            if curve_surface[ch["curve"]] != src:
                raise ScenarioError(
                    f"curve {ch['curve']!r} lies on {curve_surface[ch['curve']]!r}, not on the map source {src!r}",
                    f"{p}/curve",
                )
        if "expect" in ch:
            allowed = _EXPECT.get(kind)
            if allowed is None:
                raise ScenarioError(f"check {kind} takes no 'expect'", f"{p}/expect")
            if ch["expect"] not in allowed:
                raise ScenarioError(f"expect must be one of {', '.join(allowed)}", f"{p}/expect")
        checks.append(
            CheckSpec(
                index=i,
                check=kind,
                surface=ch.get("surface"),
                curve=ch.get("curve"),
                map=ch.get("map"),
                tol=ch.get("tol"),
                expect=ch.get("expect"),
                draws=ch.get("draws"),
                tangents=tuple(tuple(float(x) for x in ab) for ab in ch["tangents"]) if "tangents" in ch else None,
            )
        )

    return Scenario(
        name=raw.get("name", Path(source).stem),
        description=raw.get("description", ""),
        seed=int(raw.get("seed", 0)),
        surfaces=surfaces,
        curves=curves,
        curve_surface=curve_surface,
        maps=maps,
        checks=checks,
        outputs=dict(raw.get("outputs") or {}),
        digest=hashlib.sha256(text.encode()).hexdigest(),
        source=source,
        raw=raw,
    )


def demo_names() -> list[str]:
    root = resources.files("darboux.demos")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def demo_text(name: str) -> str:
    res = resources.files("darboux.demos") / f"{name}.yaml"
    if not res.is_file():
        raise ScenarioError(f"no demo named {name!r} (try: {', '.join(demo_names())})")
    return res.read_text(encoding="utf-8")


def load(ref: str | Path) -> Scenario:
    """Load a scenario file path or a ``demo:<name>`` reference."""
    ref = str(ref)
    if ref.startswith(DEMO_PREFIX):
        return load_text(demo_text(ref[len(DEMO_PREFIX):]), ref)
    try:
        text = Path(ref).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", ref) from None
    return load_text(text, ref)
