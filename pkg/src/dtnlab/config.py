"""Line-oriented ``key = value`` configuration with ``[section]`` headers.

configparser drops line numbers once a file is read, and every error here
has to name its line, so the format is parsed by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from dtnlab.boundary import DecayFamily, ManufacturedSolution
from dtnlab.grid import GridError, GridSpec, make_grid
from dtnlab.solver import SolverConfig
from dtnlab.verify import THEOREM_IDS, VerifyOptions


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _pair(text):
    v = _floats(text)
    if len(v) != 2:
        raise ValueError("expected two comma-separated numbers")
    return v


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _choice(*options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    conv.__name__ = "choice"
    return conv


def _theorems(text):
    if text.strip() == "all":
        return ()
    ids = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [v for v in ids if v not in THEOREM_IDS]
    if bad:
        raise ValueError(f"unknown theorem ids {bad}")
    return ids


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


SCHEMA = {
    "grid": {
        "L": (float, 40.0), "nx": (_int, 800), "dt": (float, 0.005), "T": (float, 100.0),
        "sponge_fraction": (float, 0.25), "sponge_strength": (float, 50.0),
    },
    "data": {
        "kind": (_choice("decay", "manufactured", "zero"), "decay"),
        "A": (float, 0.5), "m": (_int, 2), "alpha": (float, 3.0), "omega": (float, 0.0),
        "s": (float, 1.0), "dirichlet_mass": (float, None),
    },
    "solver": {
        "lambda": (_int, 1), "fixed_point_tol": (float, 1e-12),
        "max_fixed_point_iters": (_int, 50),
    },
    "verify": {
        "theorems": (_theorems, ()), "window_T32": (_pair, (10.0, 100.0)),
        "window_T38": (_pair, (20.0, 200.0)), "p": (float, 1.1), "smallness": (float, 0.05),
        "inject": (_choice("none", "divergent_pt"), "none"),
    },
    "output": {"dir": (str, "out"), "stride": (_int, 10)},
    "sweep": {"alpha": (_floats, None), "omega": (_floats, None),
              "lambda": (_floats, None), "A": (_floats, None)},
    "converge": {"levels": (_int, 3), "lambda": (_int, None), "A": (float, 1.0),
                 "cross_T": (float, 1.0), "cross_dt": (float, 1e-4),
                 "richardson": (_bool, False)},
}
REQUIRED = ("grid",)


@dataclass
class RunConfig:
    grid: GridSpec
    data: Any
    solver: SolverConfig
    verify: VerifyOptions
    inject: str = "none"
    out_dir: str = "out"
    sweep: dict = field(default_factory=dict)
    converge: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def family(self) -> Optional[DecayFamily]:
        return self.data if isinstance(self.data, DecayFamily) else None


def parse_sections(text: str) -> dict:
    """Return {section: {key: (value, line)}} with every entry type-checked."""
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header")
            current = line[1:-1].strip()
            if current not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            if current in sections:
                raise ConfigError(f"line {lineno}: section [{current}] repeated")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of any section")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA[current]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in [{current}]")
        if key in sections[current]:
            first = sections[current][key][1]
            raise ConfigError(f"duplicate key '{key}' in [{current}] at lines {first} and {lineno}")
        conv = SCHEMA[current][key][0]
        try:
            parsed = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: type mismatch for '{key}' "
                              f"(got {value!r}: {exc})") from None
        sections[current][key] = (parsed, lineno)
    for name in REQUIRED:
        if name not in sections:
            raise ConfigError(f"missing section [{name}]")
    return sections


def _with_defaults(sections, name):
    given = {k: v for k, (v, _) in sections.get(name, {}).items()}
    return {k: given.get(k, default) for k, (_, default) in SCHEMA[name].items()}


def parse_config(text: str) -> RunConfig:
    sections = parse_sections(text)
    g = _with_defaults(sections, "grid")
    try:
        grid = make_grid(g["L"], g["nx"], g["dt"], g["T"], g["sponge_fraction"], g["sponge_strength"])
    except GridError as exc:
        raise ConfigError(f"[grid]: {exc}") from None

    d = _with_defaults(sections, "data")
    s = _with_defaults(sections, "solver")
    o = _with_defaults(sections, "output")
    try:
        if d["kind"] == "manufactured":
            data = ManufacturedSolution(d["A"])
        else:
            amp = 0.0 if d["kind"] == "zero" else d["A"]
            data = DecayFamily(amp, d["m"], d["alpha"], d["omega"], d["s"])
            if d["dirichlet_mass"] is not None and d["kind"] == "decay":
                data = data.scaled_to_mass(d["dirichlet_mass"])
        solver = SolverConfig(lam=s["lambda"], fixed_point_tol=s["fixed_point_tol"],
                              max_fixed_point_iters=s["max_fixed_point_iters"],
                              snapshot_stride=o["stride"],
                              forcing=data if d["kind"] == "manufactured" else None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    v = _with_defaults(sections, "verify")
    verify = VerifyOptions(window_T32=v["window_T32"], window_T38=v["window_T38"],
                           p=v["p"], smallness=v["smallness"], theorems=v["theorems"])
    raw = {name: {k: val for k, (val, _) in entries.items()} for name, entries in sections.items()}
    return RunConfig(grid, data, solver, verify, v["inject"], o["dir"],
                     _with_defaults(sections, "sweep") if "sweep" in sections else {},
                     _with_defaults(sections, "converge"), raw)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
