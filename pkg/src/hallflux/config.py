"""Run configuration: a TOML file validated against a fixed schema.

Every schema error names the offending dotted key and, when the key is
present in the file, its line::

    run.toml:7: time.dt: expected a positive number or "auto", got -0.1

Lengths that scale with the grid (mollifier radii, ``scheme.eps`` of a
regularized run) may be written as ``"4h"``, meaning four grid spacings.
"""

from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import besov, diagnostics, hmhd, mll
from .errors import ConfigError, HallfluxError
from .fields import Grid
from .mollify import KERNEL_KINDS, admissible_eps

SYSTEMS = ("mll", "mhd", "hmhd")
SCHEME_KINDS = {"mll": ("strong", "penalized"), "mhd": ("strong", "regularized"), "hmhd": ("strong", "regularized")}
SYSTEM_LAWS = {
    "mll": ("mll-energy",),
    "mhd": ("mhd-energy", "mhd-magneto-helicity", "fluid-helicity", "crossed-helicity"),
    "hmhd": ("hmhd-energy", "hmhd-magneto-helicity", "fluid-helicity", "total-helicity"),
}
SYSTEM_FIELDS = {"mll": ("m", "E", "H"), "mhd": ("u", "B"), "hmhd": ("u", "B")}
INIT_PARAMS = {
    "mll": ("amplitude", "kmax", "field_amplitude"),
    "mhd": ("amplitude", "kmax", "spectral_slope"),
    "hmhd": ("amplitude", "kmax", "spectral_slope"),
}
QUADRATURES = ("simpson", "trapezoid")

_TABLES = {
    "": ("system",),
    "scheme": ("kind", "eps", "kernel", "dealias"),
    "grid": ("n", "L"),
    "time": ("t_end", "dt", "sample_every"),
    "init": ("preset", "seed", "amplitude", "kmax", "spectral_slope", "field_amplitude"),
    "mollifier": ("kind", "ladder"),
    "diagnostics": ("laws", "windows", "quadrature", "suitability"),
    "besov": ("exponents", "field", "shells"),
    "output": ("directory", "snapshot_every"),
}
_GRID_LENGTH = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*h\s*$")


@dataclass
class RunConfig:
    """Validated run settings. ``dt is None`` means the stability bound."""

    system: str
    scheme: str
    eps: float | None
    kernel: str
    dealias: bool
    n: int
    box: float
    t_end: float
    dt: float | None
    sample_every: int
    preset: str
    seed: int
    preset_params: dict
    mollifier_kind: str
    ladder: list
    laws: list
    windows: list
    quadrature: str
    suitability: bool
    besov_exponents: list
    besov_field: str
    besov_shells: list | None
    out_dir: Path
    snapshot_every: int
    text: str = field(repr=False)
    source: str = "<config>"

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.box)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def energy_law(self) -> str:
        return f"{self.system}-energy"

    def initial_state(self):
        """Initial data from the preset; the seed fully determines it."""
        g = self.grid
        if self.system == "mll":
            return mll.preset(
                g, self.preset, self.seed, self.scheme, self.eps if self.scheme == "penalized" else None,
                **self.preset_params,
            )
        eps = self.eps if self.scheme == "regularized" else None
        return hmhd.preset(g, self.preset, self.seed, self.system, eps, self.kernel, **self.preset_params)


def _line_of(text: str, path: str) -> int | None:
    """Line (1-based) where the dotted key ``path`` is assigned or its table opens."""
    table = ""
    header_line = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = re.match(r"^\[\s*([^\]]+?)\s*\]$", line)
        if header:
            table = header.group(1).replace(" ", "")
            if table == path or path.startswith(table + "."):
                header_line = number
            continue
        key = re.match(r"^([A-Za-z0-9_.\-\s\"]+?)\s*=", line)
        if key:
            name = key.group(1).replace(" ", "").replace('"', "")
            full = f"{table}.{name}" if table else name
            if full == path or path.startswith(full + "."):
                return number
    return header_line


class _Checker:
    def __init__(self, data: dict, text: str, source: str):
        self.data = data
        self.text = text
        self.source = source

    def fail(self, path: str, message: str):
        line = _line_of(self.text, path)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {path}: {message}")

    def table(self, name: str) -> dict:
        value = self.data.get(name, {})
        if not isinstance(value, dict):
            self.fail(name, f"expected a table, got {type(value).__name__}")
        return value

    def get(self, path: str, default=None, required=False):
        node = self.data
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.get(part, {})
        if parts[-1] not in node:
            if required:
                self.fail(path, "required key is missing")
            return default
        return node[parts[-1]]

    def choice(self, path, options, default=None, required=False):
        value = self.get(path, default, required)
        if value not in options:
            self.fail(path, f"expected one of {list(options)}, got {value!r}")
        return value

    def integer(self, path, default=None, required=False, minimum=None):
        value = self.get(path, default, required)
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"expected an integer >= {minimum}, got {value!r}")
        return value

    def number(self, path, default=None, required=False, positive=False):
        value = self.get(path, default, required)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            self.fail(path, f"expected a finite number, got {value!r}")
        if positive and value <= 0:
            self.fail(path, f"expected a positive number, got {value!r}")
        return float(value)

    def length(self, path, value, h):
        """A positive length, either a number or ``"<k>h"``."""
        if isinstance(value, str):
            m = _GRID_LENGTH.match(value)
            if not m:
                self.fail(path, f"expected a number or a multiple of h such as \"4h\", got {value!r}")
            return float(m.group(1)) * h
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0 or not math.isfinite(value):
            self.fail(path, f"expected a positive length, got {value!r}")
        return float(value)

    def string_list(self, path, options, default):
        value = self.get(path, default)
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            self.fail(path, f"expected a list of strings, got {value!r}")
        for v in value:
            if v not in options:
                self.fail(path, f"{v!r} is not one of {list(options)}")
        return list(value)


def _check_unknown(c: _Checker):
    for key, value in c.data.items():
        if key in _TABLES and key:
            for inner in value if isinstance(value, dict) else ():
                if inner not in _TABLES[key]:
                    c.fail(f"{key}.{inner}", f"unknown key; allowed keys are {list(_TABLES[key])}")
        elif key not in _TABLES[""]:
            c.fail(key, f"unknown key; allowed top-level keys are {list(_TABLES[''])} and tables {list(_TABLES)[1:]}")


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    """Validate the TOML ``text``; relative output directories resolve against ``base_dir``."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: invalid TOML: {exc}") from None
    c = _Checker(data, text, source)
    _check_unknown(c)
    for name in list(_TABLES)[1:]:
        c.table(name)

    system = c.choice("system", SYSTEMS, required=True)
    n = c.integer("grid.n", required=True, minimum=8)
    box = c.number("grid.L", 2.0 * math.pi, positive=True)
    try:
        grid = Grid(n, box)
    except HallfluxError as exc:
        c.fail("grid.n", str(exc))
    h = grid.h

    scheme = c.choice("scheme.kind", SCHEME_KINDS[system], "strong")
    raw_eps = c.get("scheme.eps")
    eps = None
    if scheme != "strong":
        if raw_eps is None:
            c.fail("scheme.eps", f"the {scheme} scheme needs eps")
        eps = c.length("scheme.eps", raw_eps, h)
        if scheme == "regularized":
            lo, hi = admissible_eps(grid)
            if not lo * (1 - 1e-12) <= eps <= hi * (1 + 1e-12):
                c.fail("scheme.eps", f"mollifier radius {eps!r} outside [3h, L/2] = [{lo!r}, {hi!r}]")
    elif raw_eps is not None:
        c.fail("scheme.eps", "eps only applies to the penalized and regularized schemes")
    kernel = c.choice("scheme.kernel", KERNEL_KINDS, "bump")
    dealias = c.get("scheme.dealias", True)
    if not isinstance(dealias, bool):
        c.fail("scheme.dealias", f"expected true or false, got {dealias!r}")
    if not dealias and system == "mll":
        c.fail("scheme.dealias", "switching dealiasing off is only supported for mhd and hmhd")

    t_end = c.number("time.t_end", required=True, positive=True)
    dt = c.get("time.dt", "auto")
    if dt == "auto":
        dt = None
    elif not isinstance(dt, (int, float)) or isinstance(dt, bool) or not dt > 0 or not math.isfinite(dt):
        c.fail("time.dt", f'expected a positive number or "auto", got {dt!r}')
    else:
        dt = float(dt)
    sample_every = c.integer("time.sample_every", 1, minimum=1)

    presets = mll.PRESETS if system == "mll" else hmhd.PRESETS
    preset = c.choice("init.preset", presets, required=True)
    seed = c.integer("init.seed", 0, minimum=0)
    params = {}
    for key in _TABLES["init"][2:]:
        if key in c.table("init"):
            if key not in INIT_PARAMS[system]:
                c.fail(f"init.{key}", f"not a parameter of the {system} presets; allowed: {list(INIT_PARAMS[system])}")
            params[key] = c.number(f"init.{key}")

    mollifier_kind = c.choice("mollifier.kind", KERNEL_KINDS, "bump")
    raw_ladder = c.get("mollifier.ladder", [])
    if not isinstance(raw_ladder, list):
        c.fail("mollifier.ladder", f"expected a list of radii, got {raw_ladder!r}")
    ladder = [c.length("mollifier.ladder", v, h) for v in raw_ladder]
    lo, hi = admissible_eps(grid)
    for e in ladder:
        if not lo * (1 - 1e-12) <= e <= hi * (1 + 1e-12):
            c.fail("mollifier.ladder", f"radius {e!r} outside [3h, L/2] = [{lo!r}, {hi!r}]")

    laws = c.string_list("diagnostics.laws", diagnostics.LAWS, [f"{system}-energy"])
    for law in laws:
        if law not in SYSTEM_LAWS[system]:
            c.fail("diagnostics.laws", f"{law!r} does not apply to the {system} system; allowed: {list(SYSTEM_LAWS[system])}")
    windows = c.string_list("diagnostics.windows", diagnostics.WINDOW_PRESETS, ["global"])
    quadrature = c.choice("diagnostics.quadrature", QUADRATURES, "simpson")
    suitability = c.get("diagnostics.suitability", False)
    if not isinstance(suitability, bool):
        c.fail("diagnostics.suitability", f"expected true or false, got {suitability!r}")

    exponents = []
    raw = c.get("besov.exponents", [])
    if not isinstance(raw, list):
        c.fail("besov.exponents", f"expected a list of [alpha, p, r] triples, got {raw!r}")
    for triple in raw:
        ok = isinstance(triple, list) and len(triple) == 3
        values = []
        for v in triple if ok else ():
            if v == "inf":
                values.append(math.inf)
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                values.append(float(v))
            else:
                ok = False
        if not ok or not (values[1] >= 1 and values[2] >= 1):
            c.fail("besov.exponents", f"expected [alpha, p, r] with p, r >= 1 (or \"inf\"), got {triple!r}")
        exponents.append(tuple(values))
    besov_field = c.choice("besov.field", SYSTEM_FIELDS[system], "m" if system == "mll" else "B")
    shells = c.get("besov.shells")
    if shells is not None and (
        not isinstance(shells, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in shells)
    ):
        c.fail("besov.shells", f"expected a list of integer multipliers of h, got {shells!r}")
    if any(0 < a < 2 for a, _, _ in exponents):
        used = sorted(set(shells if shells is not None else besov.default_shells(grid)))
        top = n // 8
        if used and (used[0] < 1 or used[-1] > top):
            c.fail("besov.shells", f"multipliers {used} leave [1, {top}] (h to L/8 on n={n})")
        if len(used) < besov.MIN_SHELLS:
            key = "besov.shells" if shells is not None else "grid.n"
            c.fail(key, f"a Besov profile needs {besov.MIN_SHELLS} distinct shells in [1, {top}]; have {used}")

    directory = c.get("output.directory", "run")
    if not isinstance(directory, str) or not directory:
        c.fail("output.directory", f"expected a non-empty path, got {directory!r}")
    out_dir = Path(directory)
    if not out_dir.is_absolute() and base_dir is not None:
        out_dir = base_dir / out_dir
    snapshot_every = c.integer("output.snapshot_every", 10, minimum=0)

    return RunConfig(
        system=system, scheme=scheme, eps=eps, kernel=kernel, dealias=dealias, n=n, box=box, t_end=t_end, dt=dt,
        sample_every=sample_every, preset=preset, seed=seed, preset_params=params, mollifier_kind=mollifier_kind,
        ladder=ladder, laws=laws, windows=windows, quadrature=quadrature, suitability=suitability,
        besov_exponents=exponents, besov_field=besov_field, besov_shells=shells, out_dir=out_dir,
        snapshot_every=snapshot_every, text=text, source=source,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path), path.parent)
