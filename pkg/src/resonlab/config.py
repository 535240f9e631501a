"""Run configurations for the command line tool.

A run configuration is a YAML mapping.  It names a potential document by a
path relative to the configuration file and carries optional sections for
each command:

``grid``      resolution overrides passed to :func:`default_grid`
``region``    ``re: [lo, hi]``, ``im: [lo, hi]``, ``n_re``, ``n_im``, ``sheet``
``zeros``     ``tol`` plus keyword arguments of the zero finder
``phase``     ``lambda_min``, ``lambda_max``, ``n``, ``far_field``, ``L``
``homotopy``  ``lambda``, ``n_points``
``modes``     ``lambda_re``, ``lambda_im``, ``j``, ``cutoff``, ``method``, ``n_radial``
``wave``      time-domain parameters and decay windows
``checks``    list of ``{check: name, config: path}`` used by ``validate``
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import SchemaError
from .potentials import load_yaml, parse_spec

_SECTIONS = {"potential", "grid", "method", "region", "zeros", "phase", "homotopy",
             "modes", "wave", "checks", "cache", "out", "seed", "description"}

_ZERO_KEYS = {"tol", "samples_per_unit", "max_step", "near_zero", "newton_size",
              "max_depth", "max_perturb"}
_WAVE_KEYS = {"T", "h", "cfl", "sigma", "source", "y", "J", "j0", "windows", "margin",
              "measure_radius", "record_every", "half_width", "floor"}
_MODE_KEYS = {"lambda_re", "lambda_im", "j", "cutoff", "method", "n_radial", "dimension"}
_PHASE_KEYS = {"lambda_min", "lambda_max", "n", "far_field", "L", "far_field_tol"}


class ConfigError(SchemaError):
    """Malformed run configuration (exit code 2)."""


@dataclass
class RunConfig:
    path: Path
    text: str
    potential_path: Path | None = None
    potential_text: str = ""
    spec: object = None
    grid: dict | None = None
    method: str = "auto"
    region: dict | None = None
    zeros: dict = field(default_factory=dict)
    phase: dict | None = None
    homotopy: dict | None = None
    modes: dict | None = None
    wave: dict | None = None
    checks: list = field(default_factory=list)
    cache: bool = True
    out: str | None = None
    seed: int = 0

    @property
    def sha256(self):
        """Hash of the configuration text together with the potential it names."""
        h = hashlib.sha256(self.text.encode())
        h.update(b"\0")
        h.update(self.potential_text.encode())
        return h.hexdigest()

    def need(self, section):
        val = getattr(self, section)
        if val is None:
            raise ConfigError(section, f"section required by this command is missing from {self.path}")
        return val


def _mapping(doc, key, allowed=None):
    val = doc.get(key)
    if val is None:
        return None
    if not isinstance(val, dict):
        raise ConfigError(key, "expected a mapping")
    if allowed is not None:
        extra = set(val) - allowed
        if extra:
            raise ConfigError(f"{key}.{sorted(extra)[0]}", "unknown key")
    return dict(val)


def _positive(section, key, val):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val) or val <= 0:
        raise ConfigError(f"{section}.{key}", f"must be a positive number, got {val!r}")


def _interval(section, key, val):
    if not (isinstance(val, (list, tuple)) and len(val) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
        raise ConfigError(f"{section}.{key}", "expected [min, max]")
    if not val[0] < val[1]:
        raise ConfigError(f"{section}.{key}", f"min must be below max, got {list(val)}")
    return float(val[0]), float(val[1])


def _check_region(reg):
    reg["re"] = _interval("region", "re", reg.get("re"))
    reg["im"] = _interval("region", "im", reg.get("im"))
    for k in ("n_re", "n_im"):
        v = reg.setdefault(k, 11)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(f"region.{k}", "must be a positive integer")
    s = reg.setdefault("sheet", 0)
    if not isinstance(s, int) or isinstance(s, bool):
        raise ConfigError("region.sheet", "must be an integer")
    extra = set(reg) - {"re", "im", "n_re", "n_im", "sheet"}
    if extra:
        raise ConfigError(f"region.{sorted(extra)[0]}", "unknown key")
    return reg


def load_config(path):
    """Parse and validate a run configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("--config", f"no such file: {path}")
    text = path.read_text()
    try:
        doc = load_yaml(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<config>", f"not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<config>", "top level must be a mapping")
    extra = set(doc) - _SECTIONS
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown section")
    cfg = RunConfig(path=path, text=text)
    pot = doc.get("potential")
    if pot is not None:
        if not isinstance(pot, str):
            raise ConfigError("potential", "expected a path to a potential document")
        ppath = (path.parent / pot).resolve()
        if not ppath.is_file():
            raise ConfigError("potential", f"referenced file does not exist: {ppath}")
        cfg.potential_path = ppath
        cfg.potential_text = ppath.read_text()
        cfg.spec = parse_spec(cfg.potential_text)
    cfg.grid = _mapping(doc, "grid")
    cfg.method = doc.get("method", "auto")
    if cfg.method not in ("auto", "dense", "structured"):
        raise ConfigError("method", "must be auto, dense or structured")
    reg = _mapping(doc, "region")
    cfg.region = _check_region(reg) if reg is not None else None
    cfg.zeros = _mapping(doc, "zeros", _ZERO_KEYS) or {}
    for k in ("tol", "samples_per_unit", "max_step", "near_zero", "newton_size"):
        if k in cfg.zeros and cfg.zeros[k] is not None:
            _positive("zeros", k, cfg.zeros[k])
    cfg.phase = _mapping(doc, "phase", _PHASE_KEYS)
    if cfg.phase is not None:
        lo, hi = _interval("phase", "lambda range",
                           [cfg.phase.get("lambda_min", 0.5), cfg.phase.get("lambda_max", 10.0)])
        if lo <= 0:
            raise ConfigError("phase.lambda_min", "must be positive")
    cfg.homotopy = _mapping(doc, "homotopy", {"lambda", "n_points"})
    cfg.modes = _mapping(doc, "modes", _MODE_KEYS)
    cfg.wave = _mapping(doc, "wave", _WAVE_KEYS)
    if cfg.wave is not None:
        for k in ("T", "h", "cfl", "sigma"):
            if k in cfg.wave:
                _positive("wave", k, cfg.wave[k])
        for w in cfg.wave.get("windows", []):
            _interval("wave", "windows", w)
    checks = doc.get("checks") or []
    if not isinstance(checks, list):
        raise ConfigError("checks", "expected a list")
    for i, c in enumerate(checks):
        if not (isinstance(c, dict) and isinstance(c.get("check"), str)):
            raise ConfigError(f"checks[{i}]", "expected a mapping with a 'check' name")
        if "config" in c:
            sub = (path.parent / c["config"]).resolve()
            if not sub.is_file():
                raise ConfigError(f"checks[{i}].config", f"referenced file does not exist: {sub}")
    cfg.checks = checks
    cfg.cache = bool(doc.get("cache", True))
    cfg.out = doc.get("out")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", "must be a nonnegative integer")
    cfg.seed = seed
    return cfg
