"""INI-style experiment configuration.

A file holds an optional ``[run]`` section (``seed``, ``criteria``), an
optional ``[tolerances]`` section overriding acceptance thresholds, and any
number of ``[scenario:<name>]`` sections::

    [scenario:quad_euclidean]
    family = euclidean
    gamma = 1.0
    function = quad
    dim = 1
    y_lower = -2
    y_upper = 2
    y_points = 41
    checks = gradient, table, hessian

Vector-valued keys accept a comma-separated list or one value broadcast to
every coordinate. Parameter keys (``kernel_params``, ``function_params``)
take ``name=value`` pairs separated by commas.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .coupling import FAMILIES, make_coupling
from .kernels import KERNEL_IDS
from .suite import DEFAULT_TOLERANCES, NAMES
from .testfns import FUNCTION_IDS, make_function

__all__ = ["ConfigError", "ScenarioConfig", "RunConfig", "load_config", "parse_config", "SCAN_CHECKS"]

SCAN_CHECKS = ("gradient", "table", "hessian", "jacobian", "membership", "single_valued", "eigen")

_SCENARIO_KEYS = {
    "family", "gamma", "kernel", "kernel_params", "function", "function_params", "dim",
    "y_lower", "y_upper", "y_points", "checks", "membership_x", "expect",
    "grid_points_per_dim", "multistart_topk",
}


class ConfigError(ValueError):
    """Malformed configuration; the message names the section, field or line."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    family: str
    gamma: float
    kernel: str | None
    kernel_params: dict
    function: str
    function_params: dict
    dim: int
    y_lower: np.ndarray
    y_upper: np.ndarray
    y_points: int
    checks: tuple
    membership_x: np.ndarray | None = None
    expect: str = "positive"
    solver: dict = field(default_factory=dict)

    def build(self):
        """Return the ``(function, coupling)`` pair."""
        g = make_function(self.function, self.dim, **self.function_params)
        c = make_coupling(self.family, self.gamma, self.kernel, self.dim, self.kernel_params or None)
        return g, c

    def y_grid(self) -> np.ndarray:
        m = self.y_lower.size
        axes = [np.linspace(a, b, self.y_points) for a, b in zip(self.y_lower, self.y_upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, m)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    criteria: tuple | None = None
    tolerances: dict = field(default_factory=dict)
    scenarios: tuple = ()


def _where(section, key):
    return f"[{section}] {key}"


def _float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{_where(section, key)}: expected a number, got {raw!r}") from None


def _int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{_where(section, key)}: expected an integer, got {raw!r}") from None


def _vector(section, key, raw, n):
    parts = [p for p in raw.replace(";", ",").split(",") if p.strip()]
    vals = [_float(section, key, p) for p in parts]
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise ConfigError(f"{_where(section, key)}: expected 1 or {n} values, got {len(vals)}")
    return np.array(vals, dtype=float)


def _params(section, key, raw):
    out = {}
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"{_where(section, key)}: expected name=value, got {item!r}")
        name, val = (s.strip() for s in item.split("=", 1))
        out[name] = _float(section, key, val)
    return out


def _scenario(name, sec) -> ScenarioConfig:
    section = f"scenario:{name}"
    unknown = set(sec) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"[{section}]: unknown field(s) {sorted(unknown)}")
    for key in ("family", "function"):
        if key not in sec:
            raise ConfigError(f"{_where(section, key)}: missing required field")
    family = sec["family"].strip()
    if family not in FAMILIES:
        raise ConfigError(f"{_where(section, 'family')}: unknown coupling family {family!r}")
    function = sec["function"].strip()
    if function not in FUNCTION_IDS:
        raise ConfigError(f"{_where(section, 'function')}: unknown function id {function!r}")
    kernel = sec.get("kernel", "").strip() or None
    if kernel is not None and kernel not in KERNEL_IDS:
        raise ConfigError(f"{_where(section, 'kernel')}: unknown kernel id {kernel!r}")
    dim = _int(section, "dim", sec.get("dim", "1"))
    gamma = _float(section, "gamma", sec.get("gamma", "1.0"))
    kparams = _params(section, "kernel_params", sec.get("kernel_params", ""))
    fparams = _params(section, "function_params", sec.get("function_params", ""))
    try:
        g = make_function(function, dim, **fparams)
        c = make_coupling(family, gamma, kernel, dim, kparams or None)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None
    m = c.dim_y
    y_lower = _vector(section, "y_lower", sec.get("y_lower", "-1"), m)
    y_upper = _vector(section, "y_upper", sec.get("y_upper", "1"), m)
    y_points = _int(section, "y_points", sec.get("y_points", "11"))
    if y_points < 1:
        raise ConfigError(f"{_where(section, 'y_points')}: must be positive")
    if np.any(y_upper < y_lower):
        raise ConfigError(f"[{section}]: y_upper below y_lower")
    if not (c.Y.contains(y_lower) and c.Y.contains(y_upper)):
        raise ConfigError(f"[{section}]: y grid [{y_lower}, {y_upper}] leaves Y = {c.Y}")
    checks = tuple(s.strip() for s in sec.get("checks", "").split(",") if s.strip())
    bad = [k for k in checks if k not in SCAN_CHECKS]
    if bad:
        raise ConfigError(f"{_where(section, 'checks')}: unknown check(s) {bad}; expected {SCAN_CHECKS}")
    mx = None
    if "membership_x" in sec:
        mx = _vector(section, "membership_x", sec["membership_x"], c.dim_x)
        if not c.X.contains(mx) or not np.isfinite(g.value(mx)):
            raise ConfigError(f"{_where(section, 'membership_x')}: point outside X or dom g")
    elif "membership" in checks:
        raise ConfigError(f"{_where(section, 'membership_x')}: required by the membership check")
    expect = sec.get("expect", "positive").strip()
    if expect not in ("positive", "negative"):
        raise ConfigError(f"{_where(section, 'expect')}: expected 'positive' or 'negative'")
    solver = {}
    for key in ("grid_points_per_dim", "multistart_topk"):
        if key in sec:
            solver[key] = _int(section, key, sec[key])
    return ScenarioConfig(name, family, gamma, kernel, kparams, function, fparams, dim,
                          y_lower, y_upper, y_points, checks, mx, expect, solver)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` with location details."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    seed, criteria = 0, None
    if cp.has_section("run"):
        run = cp["run"]
        unknown = set(run) - {"seed", "criteria"}
        if unknown:
            raise ConfigError(f"[run]: unknown field(s) {sorted(unknown)}")
        seed = _int("run", "seed", run.get("seed", "0"))
        if "criteria" in run:
            criteria = []
            for item in run["criteria"].split(","):
                item = item.strip()
                if not item:
                    continue
                num = NAMES.get(item) or (int(item) if item.isdigit() else None)
                if num not in NAMES.values():
                    raise ConfigError(f"[run] criteria: unknown criterion {item!r}")
                criteria.append(num)
            criteria = tuple(criteria)
    tols = {}
    if cp.has_section("tolerances"):
        for key, raw in cp["tolerances"].items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"[tolerances] {key}: unknown tolerance")
            tols[key] = _float("tolerances", key, raw)
    scenarios = []
    for name in cp.sections():
        if name in ("run", "tolerances"):
            continue
        if not name.startswith("scenario:") or not name[len("scenario:"):].strip():
            raise ConfigError(f"[{name}]: unknown section")
        scenarios.append(_scenario(name[len("scenario:"):].strip(), cp[name]))
    return RunConfig(seed, criteria, tols, tuple(scenarios))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
