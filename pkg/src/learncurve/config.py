"""INI-style text format for curve specs and expansion scenarios.

The grammar is documented in docs/config_format.md. Parsing is strict:
unknown sections or keys are errors, so typos do not silently fall back
to defaults.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from pathlib import Path
from typing import Mapping

from .curves import (
    DEFAULT_STAGE_BOUNDS,
    Component,
    Composite,
    CurveError,
    Diminishing,
    LearningSpec,
    Modified,
    OneFactor,
    Partial,
    Staged,
    TwoFactor,
    exponent_to_lr,
    lr_to_exponent,
)
from .expansion import ConfigError, ScenarioConfig, TechnologySpec, static_cost_path
from .pwl import PwlPolicy

CURVE_TYPES = ("one_factor", "two_factor", "partial", "diminishing", "staged", "composite")

_CURVE_KEYS = {
    "one_factor": {"c0", "x0", "lr"},
    "two_factor": {"c0", "x0", "lr", "y0", "lbr"},
    "partial": {"c0", "x0", "lr", "alpha"},
    "diminishing": {"c0", "x0", "lr0", "d"},
    "staged": {"c0", "x0", "rates", "bounds"},
    "composite": set(),
}
_OPTIONAL_CURVE_KEYS = {"floor_cost", "threshold_x"}
_MODIFIER_KEYS = {"floor_cost", "threshold_x"}
_COMPONENT_KEYS = {"id", "c0", "x0", "lr"}
_TECH_KEYS = {
    "x0_local",
    "world_additions",
    "var_cost",
    "emission_factor",
    "availability",
    "max_build",
    "exo_cost",
}
_SCENARIO_KEYS = {
    "name",
    "periods",
    "hours_per_period",
    "demand",
    "emission_cap",
    "discount_rate",
    "mode",
    "pwl_per_doubling",
    "pwl_max_rel_error",
    "build_grid_steps",
    "node_limit",
}


def _num(text: str, key: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _nums(text: str, key: str) -> tuple[float, ...]:
    parts = [p for p in text.replace("\n", ",").split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers")
    return tuple(_num(p, key) for p in parts)


def _int(text: str, key: str) -> int:
    v = _num(text, key)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(v)


def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _fmt_list(vals) -> str:
    return ", ".join(_fmt(v) for v in vals)


def _reader() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep key case
    return cp


def _read(text: str, source: str = "<string>") -> configparser.ConfigParser:
    cp = _reader()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from None
    return cp


def _read_file(path) -> configparser.ConfigParser:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return _read(text, str(path))


def _check_keys(section: str, keys, allowed) -> None:
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ConfigError(f"[{section}]: unknown key(s) {', '.join(extra)}")


def _curve_kind(values, where: str) -> str:
    kind = values.get("curve", "one_factor").strip()
    if kind not in CURVE_TYPES:
        raise ConfigError(f"[{where}]: curve must be one of {', '.join(CURVE_TYPES)}, got {kind!r}")
    return kind


def _components(cp, prefix: str) -> list[Component]:
    sections = [s for s in cp.sections() if s.startswith(prefix + ".component.")]
    try:
        sections.sort(key=lambda s: int(s.rsplit(".", 1)[1]))
    except ValueError:
        raise ConfigError(f"component sections under [{prefix}] must be numbered") from None
    out = []
    for s in sections:
        sec = cp[s]
        _check_keys(s, sec.keys(), _COMPONENT_KEYS)
        missing = _COMPONENT_KEYS - set(sec.keys())
        if missing:
            raise ConfigError(f"[{s}]: missing key(s) {', '.join(sorted(missing))}")
        out.append(Component.from_lr(sec["id"].strip(), _num(sec["c0"], "c0"), _num(sec["x0"], "x0"), _num(sec["lr"], "lr")))
    return out


def parse_curve(values: Mapping[str, str], components: list[Component] | None = None, where: str = "curve") -> LearningSpec:
    """Build a curve from one section's key/value strings."""
    kind = _curve_kind(values, where)
    keys = {k for k in values if k != "curve"}
    required = _CURVE_KEYS[kind] - {"bounds"}
    missing = required - keys
    if missing:
        raise ConfigError(f"[{where}]: {kind} curve needs {', '.join(sorted(missing))}")
    g = {k: values[k] for k in keys & (_CURVE_KEYS[kind] | _MODIFIER_KEYS)}
    try:
        if kind == "one_factor":
            spec = OneFactor.from_lr(_num(g["c0"], "c0"), _num(g["x0"], "x0"), _num(g["lr"], "lr"))
        elif kind == "two_factor":
            spec = TwoFactor(
                _num(g["c0"], "c0"),
                _num(g["x0"], "x0"),
                lr_to_exponent(_num(g["lr"], "lr")),
                _num(g["y0"], "y0"),
                lr_to_exponent(_num(g["lbr"], "lbr")),
            )
        elif kind == "partial":
            spec = Partial.from_lr(_num(g["c0"], "c0"), _num(g["x0"], "x0"), _num(g["lr"], "lr"), _num(g["alpha"], "alpha"))
        elif kind == "diminishing":
            spec = Diminishing(_num(g["c0"], "c0"), _num(g["x0"], "x0"), _num(g["lr0"], "lr0"), _num(g["d"], "d"))
        elif kind == "staged":
            rates = _nums(g["rates"], "rates")
            bounds = _nums(g["bounds"], "bounds") if "bounds" in g else DEFAULT_STAGE_BOUNDS[-len(rates):]
            if len(bounds) != len(rates):
                raise ConfigError(f"[{where}]: staged curve needs as many bounds as rates")
            if "bounds" not in g and len(rates) > len(DEFAULT_STAGE_BOUNDS):
                raise ConfigError(f"[{where}]: more than {len(DEFAULT_STAGE_BOUNDS)} stages need explicit bounds")
            spec = Staged(_num(g["c0"], "c0"), _num(g["x0"], "x0"), tuple(zip(bounds, rates)))
        else:
            if not components:
                raise ConfigError(f"[{where}]: composite curve needs numbered component sections")
            spec = Composite(tuple(components))
        floor = _num(g["floor_cost"], "floor_cost") if "floor_cost" in g else None
        thresh = _num(g["threshold_x"], "threshold_x") if "threshold_x" in g else None
        if floor is not None or thresh is not None:
            spec = Modified(spec, floor, thresh)
    except CurveError as exc:
        raise ConfigError(f"[{where}]: {exc}") from None
    return spec


def load_curve(path) -> LearningSpec:
    """Read a curve file: one ``[curve]`` section plus ``[curve.component.N]`` for composites."""
    return _curve_from(_read_file(path))


def loads_curve(text: str) -> LearningSpec:
    return _curve_from(_read(text))


def _curve_from(cp) -> LearningSpec:
    if "curve" not in cp:
        raise ConfigError("curve file needs a [curve] section")
    for s in cp.sections():
        if s != "curve" and not s.startswith("curve.component."):
            raise ConfigError(f"unexpected section [{s}] in a curve file")
    sec = cp["curve"]
    _check_keys("curve", sec.keys(), {"curve"} | _CURVE_KEYS[_curve_kind(sec, "curve")] | _OPTIONAL_CURVE_KEYS)
    return parse_curve(dict(sec), _components(cp, "curve"))


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario file with one ``[scenario]`` and several ``[technology.<name>]`` sections."""
    return _scenario_from(_read_file(path))


def loads_scenario(text: str) -> ScenarioConfig:
    return _scenario_from(_read(text))


def _scenario_from(cp) -> ScenarioConfig:
    if "scenario" not in cp:
        raise ConfigError("scenario file needs a [scenario] section")
    tech_names = []
    for s in cp.sections():
        if s == "scenario":
            continue
        parts = s.split(".")
        if parts[0] != "technology" or len(parts) not in (2, 4) or (len(parts) == 4 and parts[2] != "component"):
            raise ConfigError(f"unexpected section [{s}]")
        if len(parts) == 2:
            tech_names.append(parts[1])
    if not tech_names:
        raise ConfigError("scenario needs at least one [technology.<name>] section")
    sec = cp["scenario"]
    _check_keys("scenario", sec.keys(), _SCENARIO_KEYS)
    if "periods" not in sec:
        raise ConfigError("[scenario]: periods is required")
    periods = _int(sec["periods"], "periods")
    if "pwl_per_doubling" in sec and "pwl_max_rel_error" in sec:
        raise ConfigError("[scenario]: give only one of pwl_per_doubling and pwl_max_rel_error")
    if "pwl_max_rel_error" in sec:
        policy = PwlPolicy(max_rel_error=_num(sec["pwl_max_rel_error"], "pwl_max_rel_error"))
    else:
        policy = PwlPolicy(per_doubling=_int(sec.get("pwl_per_doubling", "2"), "pwl_per_doubling"))

    techs = []
    for name in tech_names:
        s = f"technology.{name}"
        values = dict(cp[s])
        curve_keys = {"curve"} | _CURVE_KEYS[_curve_kind(values, s)] | _OPTIONAL_CURVE_KEYS
        _check_keys(s, values.keys(), curve_keys | _TECH_KEYS)
        learning = parse_curve({k: v for k, v in values.items() if k in curve_keys}, _components(cp, s), s)
        opt = {}
        for key in ("x0_local", "var_cost", "emission_factor", "availability", "max_build"):
            if key in values:
                opt[key] = _num(values[key], f"{s}.{key}")
        if "world_additions" in values:
            w = _nums(values["world_additions"], f"{s}.world_additions")
            opt["world_additions"] = w[0] if len(w) == 1 else w
        try:
            tech = TechnologySpec(name, learning, **opt)
        except (CurveError, TypeError) as exc:
            raise ConfigError(f"[{s}]: {exc}") from None
        if "exo_cost" in values:
            raw = values["exo_cost"].strip()
            path = static_cost_path(tech, periods) if raw == "static" else _nums(raw, f"{s}.exo_cost")
            tech = TechnologySpec(name, learning, **opt, exo_cost_path=path)
        techs.append(tech)

    kwargs = {}
    if "name" in sec:
        kwargs["name"] = sec["name"].strip()
    for key in ("hours_per_period", "discount_rate"):
        if key in sec:
            kwargs[key] = _num(sec[key], key)
    for key in ("demand", "emission_cap"):
        if key in sec:
            vals = _nums(sec[key], key)
            kwargs[key] = vals[0] if len(vals) == 1 else vals
    if "mode" in sec:
        kwargs["mode"] = sec["mode"].strip()
    if "build_grid_steps" in sec:
        kwargs["build_grid_steps"] = _int(sec["build_grid_steps"], "build_grid_steps")
    if "node_limit" in sec:
        kwargs["node_limit"] = _int(sec["node_limit"], "node_limit")
    return ScenarioConfig(tuple(techs), periods, pwl_policy=policy, **kwargs)


# ----------------------------------------------------------------------------
# writing


def curve_items(spec: LearningSpec) -> tuple[list[tuple[str, str]], list[Component]]:
    """Key/value pairs describing ``spec`` plus its components (composites only)."""
    mods = []
    if isinstance(spec, Modified):
        if spec.floor_cost is not None:
            mods.append(("floor_cost", _fmt(spec.floor_cost)))
        if spec.threshold_x is not None:
            mods.append(("threshold_x", _fmt(spec.threshold_x)))
        spec = spec.inner
    comps: list[Component] = []
    if isinstance(spec, OneFactor):
        items = [("curve", "one_factor"), ("c0", _fmt(spec.c0)), ("x0", _fmt(spec.x0)), ("lr", _fmt(spec.lr))]
    elif isinstance(spec, TwoFactor):
        items = [
            ("curve", "two_factor"),
            ("c0", _fmt(spec.c0)),
            ("x0", _fmt(spec.x0)),
            ("lr", _fmt(exponent_to_lr(spec.exponent))),
            ("y0", _fmt(spec.y0)),
            ("lbr", _fmt(exponent_to_lr(spec.research_exponent))),
        ]
    elif isinstance(spec, Partial):
        items = [("curve", "partial"), ("c0", _fmt(spec.c0)), ("x0", _fmt(spec.x0)), ("lr", _fmt(spec.lr)), ("alpha", _fmt(spec.alpha))]
    elif isinstance(spec, Diminishing):
        items = [("curve", "diminishing"), ("c0", _fmt(spec.c0)), ("x0", _fmt(spec.x0)), ("lr0", _fmt(spec.lr0)), ("d", _fmt(spec.d))]
    elif isinstance(spec, Staged):
        items = [
            ("curve", "staged"),
            ("c0", _fmt(spec.c0)),
            ("x0", _fmt(spec.x0)),
            ("rates", _fmt_list(lr for _, lr in spec.stages)),
            ("bounds", _fmt_list(u for u, _ in spec.stages)),
        ]
    elif isinstance(spec, Composite):
        items = [("curve", "composite")]
        comps = list(spec.components)
    else:
        raise ConfigError(f"cannot serialise {type(spec).__name__}")
    return items + mods, comps


def _section(lines: list[str], name: str, items) -> None:
    if lines:
        lines.append("")
    lines.append(f"[{name}]")
    lines.extend(f"{k} = {v}" for k, v in items)


def _component_sections(lines, prefix, comps) -> None:
    for i, c in enumerate(comps, start=1):
        _section(lines, f"{prefix}.component.{i}", [("id", c.id), ("c0", _fmt(c.c0)), ("x0", _fmt(c.x0)), ("lr", _fmt(c.lr))])


def dump_curve(spec: LearningSpec) -> str:
    items, comps = curve_items(spec)
    lines: list[str] = []
    _section(lines, "curve", items)
    _component_sections(lines, "curve", comps)
    return "\n".join(lines) + "\n"


def dump_scenario(sc: ScenarioConfig) -> str:
    def one_or_list(v):
        return _fmt(v) if isinstance(v, (int, float)) else _fmt_list(v)

    items = [
        ("name", sc.name),
        ("periods", str(sc.periods)),
        ("hours_per_period", _fmt(sc.hours_per_period)),
        ("demand", one_or_list(sc.demand)),
        ("emission_cap", one_or_list(sc.emission_cap)),
        ("discount_rate", _fmt(sc.discount_rate)),
        ("mode", sc.mode),
    ]
    if sc.pwl_policy.per_doubling is not None:
        items.append(("pwl_per_doubling", str(sc.pwl_policy.per_doubling)))
    else:
        items.append(("pwl_max_rel_error", _fmt(sc.pwl_policy.max_rel_error)))
    if sc.build_grid_steps is not None:
        items.append(("build_grid_steps", str(sc.build_grid_steps)))
    items.append(("node_limit", str(sc.node_limit)))
    lines: list[str] = []
    _section(lines, "scenario", items)
    for t in sc.technologies:
        curve, comps = curve_items(t.learning)
        tech_items = curve + [
            ("x0_local", _fmt(t.x0_local)),
            ("world_additions", one_or_list(t.world_additions)),
            ("var_cost", _fmt(t.var_cost)),
            ("emission_factor", _fmt(t.emission_factor)),
            ("availability", _fmt(t.availability)),
            ("max_build", _fmt(t.max_build)),
        ]
        if t.exo_cost_path is not None:
            tech_items.append(("exo_cost", _fmt_list(t.exo_cost_path)))
        _section(lines, f"technology.{t.name}", tech_items)
        _component_sections(lines, f"technology.{t.name}", comps)
    return "\n".join(lines) + "\n"


def digest(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()
