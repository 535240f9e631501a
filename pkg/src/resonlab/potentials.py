"""Compactly supported complex potentials.

Three kinds are supported:

* ``SeparableAngular``: ``V = exp(i m theta) * V1(rho) * V2(x')`` in cylindrical
  coordinates ``x1 = rho cos(theta)``, ``x2 = rho sin(theta)``, ``x' = x3``
  (``x'`` is absent for ``d = 2``).
* ``Radial``: ``V = profile(|x|)``.  In one dimension this is the even
  extension ``profile(|x|)``.
* ``Sampled``: complex samples on a cartesian grid with piecewise-constant
  or multilinear interpolation.

Documents use the key names ``dimension, kind, m, v1, v2, profile,
support_radius``.  Profiles carry ``form`` plus the fields of that form and
complex amplitudes split into ``amplitude_re`` / ``amplitude_im``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Union

import numpy as np
import yaml

from .errors import SchemaError

__all__ = [
    "SquareWell", "Bump", "Table", "SeparableAngular", "Radial", "Sampled",
    "PotentialSpec", "eval_potential", "eval_cylindrical", "scale_family",
    "rotate_spec", "rotate_points", "parse_spec", "serialize_spec", "dump_spec",
    "infer_support_radius", "zero_potential",
]


# --------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class SquareWell:
    """Constant ``amplitude`` on the closed interval ``[lo, hi]``."""

    amplitude: complex
    interval: tuple

    def __post_init__(self):
        lo, hi = self.interval
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise SchemaError("interval", f"need finite lo < hi, got {self.interval}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.interval
        return np.where((s >= lo) & (s <= hi), complex(self.amplitude), 0j)

    @property
    def support(self):
        return tuple(self.interval)

    @property
    def breakpoints(self):
        return tuple(self.interval)

    @property
    def sup_norm(self):
        return abs(self.amplitude)

    def scaled(self, c):
        return replace(self, amplitude=complex(self.amplitude) * c)


@dataclass(frozen=True)
class Bump:
    """Smooth bump ``A exp(k (1 - 1/(1 - q^2)))``, ``q = (s - center)/width``.

    ``steepness`` is ``k``; ``k = 1`` is the textbook bump with peak value
    ``A``.  Larger ``k`` narrows the effective profile and makes its Fourier
    transform decay faster, which keeps lattice artifacts of time-domain
    solvers far below the signals of interest.
    """

    amplitude: complex
    center: float
    width: float
    steepness: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise SchemaError("width", "must be positive")
        if not self.steepness > 0:
            raise SchemaError("steepness", "must be positive")

    def __call__(self, s):
        q = (np.asarray(s, dtype=float) - self.center) / self.width
        inside = np.abs(q) < 1.0
        q2 = np.where(inside, q * q, 0.0)
        val = np.exp(self.steepness * (1.0 - 1.0 / (1.0 - q2)))
        return np.where(inside, complex(self.amplitude) * val, 0j)

    @property
    def support(self):
        return (self.center - self.width, self.center + self.width)

    @property
    def breakpoints(self):
        return self.support

    @property
    def sup_norm(self):
        return abs(self.amplitude)

    def scaled(self, c):
        return replace(self, amplitude=complex(self.amplitude) * c)


@dataclass(frozen=True)
class Table:
    """Tabulated profile, zero outside ``[nodes[0], nodes[-1]]``.

    ``order=0`` holds ``values[i]`` on ``[nodes[i], nodes[i+1])``;
    ``order=1`` interpolates linearly.
    """

    nodes: tuple
    values: tuple
    order: int = 1

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise SchemaError("nodes", "need at least two nodes")
        if not np.all(np.diff(x) > 0):
            raise SchemaError("nodes", "must be strictly increasing")
        if len(self.values) != x.size:
            raise SchemaError("values", "length must match nodes")
        if self.order not in (0, 1):
            raise SchemaError("order", "interpolation order must be 0 or 1")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        x = np.asarray(self.nodes, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        inside = (s >= x[0]) & (s <= x[-1])
        if self.order == 1:
            out = np.interp(s, x, v.real) + 1j * np.interp(s, x, v.imag)
        else:
            idx = np.clip(np.searchsorted(x, s, side="right") - 1, 0, x.size - 1)
            out = v[idx]
        return np.where(inside, out, 0j)

    @property
    def support(self):
        return (float(self.nodes[0]), float(self.nodes[-1]))

    @property
    def breakpoints(self):
        return tuple(float(t) for t in self.nodes)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(np.asarray(self.values, dtype=complex))))

    def scaled(self, c):
        return replace(self, values=tuple(complex(v) * c for v in self.values))


Profile = Union[SquareWell, Bump, Table]


# --------------------------------------------------------------------------
# potential kinds

@dataclass(frozen=True)
class SeparableAngular:
    m: int
    v1: Profile
    v2: Profile | None = None


@dataclass(frozen=True)
class Radial:
    profile: Profile


@dataclass(frozen=True)
class Sampled:
    """Samples ``values[i0, i1, ...]`` at the tensor nodes ``axes``."""

    axes: tuple
    values: np.ndarray = field(compare=False)
    order: int = 1

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != len(self.axes):
            raise SchemaError("values", "array rank must equal number of axes")
        for k, ax in enumerate(self.axes):
            a = np.asarray(ax, dtype=float)
            if a.size != vals.shape[k]:
                raise SchemaError(f"axes[{k}]", "length does not match values")
            if a.size < 2 or not np.all(np.diff(a) > 0):
                raise SchemaError(f"axes[{k}]", "must be strictly increasing, length >= 2")
        if self.order not in (0, 1):
            raise SchemaError("order", "interpolation order must be 0 or 1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "axes", tuple(tuple(float(t) for t in ax) for ax in self.axes))

    def __eq__(self, other):
        return (isinstance(other, Sampled) and self.axes == other.axes
                and self.order == other.order
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.axes, self.order, self.values.tobytes()))


@dataclass(frozen=True)
class PotentialSpec:
    dimension: int
    kind: SeparableAngular | Radial | Sampled
    support_radius: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise SchemaError("dimension", "must be 1, 2 or 3")
        if not (self.support_radius > 0 and math.isfinite(self.support_radius)):
            raise SchemaError("support_radius", "must be a positive finite number")
        k = self.kind
        if isinstance(k, SeparableAngular):
            if self.dimension == 1:
                raise SchemaError("kind", "separable_angular needs dimension 2 or 3")
            if int(k.m) != k.m or k.m == 0:
                raise SchemaError(
                    "m", "must be a nonzero integer: the resonance-free construction "
                    "requires m != 0 (use kind 'radial' for rotation-invariant potentials)")
            if self.dimension == 3 and k.v2 is None:
                raise SchemaError("v2", "required for dimension 3")
            if self.dimension == 2 and k.v2 is not None:
                raise SchemaError("v2", "must be absent for dimension 2")
        if isinstance(k, Sampled) and len(k.axes) != self.dimension:
            raise SchemaError("axes", "number of axes must equal dimension")

    @property
    def is_zero(self):
        k = self.kind
        if isinstance(k, SeparableAngular):
            return k.v1.sup_norm == 0 or (k.v2 is not None and k.v2.sup_norm == 0)
        if isinstance(k, Radial):
            return k.profile.sup_norm == 0
        return not np.any(k.values)

    @property
    def sup_norm(self):
        k = self.kind
        if isinstance(k, SeparableAngular):
            return k.v1.sup_norm * (1.0 if k.v2 is None else k.v2.sup_norm)
        if isinstance(k, Radial):
            return k.profile.sup_norm
        return float(np.max(np.abs(k.values)))

    @property
    def is_rotation_invariant(self):
        return isinstance(self.kind, Radial) or self.is_zero


def zero_potential(dimension, support_radius=1.0):
    """V = 0 expressed as a radial spec with zero amplitude."""
    prof = SquareWell(0j, (0.0, support_radius))
    return PotentialSpec(dimension, Radial(prof), support_radius)


# --------------------------------------------------------------------------
# evaluation

def eval_cylindrical(spec, rho, theta, xp=None):
    """Evaluate in cylindrical coordinates (``xp`` ignored unless d = 3).

    Only meaningful for SeparableAngular and Radial kinds with d >= 2.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    xp = np.zeros_like(rho) if xp is None else np.asarray(xp, dtype=float)
    if spec.dimension == 2:
        xp = np.zeros_like(rho)
    r = np.sqrt(rho ** 2 + xp ** 2)
    k = spec.kind
    if isinstance(k, SeparableAngular):
        val = k.v1(rho) * np.exp(1j * k.m * theta)
        if spec.dimension == 3:
            val = val * k.v2(xp)
    elif isinstance(k, Radial):
        val = k.profile(r) * np.ones_like(theta)
    else:
        x = np.stack([rho * np.cos(theta), rho * np.sin(theta)]
                     + ([xp] if spec.dimension == 3 else []), axis=-1)
        return eval_potential(spec, x)
    return np.where(r > spec.support_radius, 0j, val)


def eval_potential(spec, x):
    """V at points ``x`` with trailing axis of length ``d`` (or scalars for d = 1)."""
    x = np.asarray(x, dtype=float)
    d = spec.dimension
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"points must have trailing dimension {d}")
    r = np.sqrt(np.sum(x * x, axis=-1))
    k = spec.kind
    if isinstance(k, Radial):
        val = k.profile(r)
    elif isinstance(k, SeparableAngular):
        rho = np.hypot(x[..., 0], x[..., 1])
        theta = np.arctan2(x[..., 1], x[..., 0])
        val = k.v1(rho) * np.exp(1j * k.m * theta)
        if d == 3:
            val = val * k.v2(x[..., 2])
    else:
        val = _eval_sampled(k, x)
    return np.where(r > spec.support_radius, 0j, val)


def _eval_sampled(k, x):
    from scipy.interpolate import RegularGridInterpolator

    axes = [np.asarray(a) for a in k.axes]
    method = "linear" if k.order == 1 else "nearest"
    pts = x.reshape(-1, x.shape[-1])
    out = np.zeros(pts.shape[0], dtype=complex)
    inside = np.ones(pts.shape[0], dtype=bool)
    for j, a in enumerate(axes):
        inside &= (pts[:, j] >= a[0]) & (pts[:, j] <= a[-1])
    if np.any(inside):
        if k.order == 0:
            # cell-wise constant: value of the lower-left node of the cell
            idx = tuple(np.clip(np.searchsorted(a, pts[inside, j], side="right") - 1, 0, a.size - 1)
                        for j, a in enumerate(axes))
            out[inside] = k.values[idx]
        else:
            interp = RegularGridInterpolator(axes, k.values, method=method)
            out[inside] = interp(pts[inside])
    return out.reshape(x.shape[:-1])


# --------------------------------------------------------------------------
# transformations

def rotate_points(x, phi):
    """Rotate points by ``phi`` in the x1-x2 plane."""
    x = np.array(x, dtype=float, copy=True)
    c, s = math.cos(phi), math.sin(phi)
    x1 = c * x[..., 0] - s * x[..., 1]
    x2 = s * x[..., 0] + c * x[..., 1]
    x[..., 0], x[..., 1] = x1, x2
    return x


def scale_family(spec, z):
    """The family member ``z**m * V`` (amplitude of ``v1`` scaled)."""
    k = spec.kind
    if not isinstance(k, SeparableAngular):
        raise ValueError("scale_family needs a separable_angular potential")
    z = complex(z)
    if z == 0 and k.m < 0:
        raise ValueError("z = 0 is a pole of z**m for m < 0")
    if z == 0:
        factor = 0j
    elif k.m > 0:
        factor = _int_power(z, k.m)
    else:
        factor = 1.0 / _int_power(z, -k.m)
    return replace(spec, kind=replace(k, v1=k.v1.scaled(factor)))


def _int_power(z, n):
    # repeated multiplication keeps |e^{i phi}|^n on the unit circle to roundoff
    out = 1 + 0j
    for _ in range(n):
        out *= z
    return out


def rotate_spec(spec, phi):
    """Spec whose value at ``x`` equals ``V(R_phi x)``.

    For separable potentials this is ``scale_family(spec, e^{i phi})``.
    """
    k = spec.kind
    if isinstance(k, Radial) or spec.dimension == 1:
        return spec
    if isinstance(k, SeparableAngular):
        return scale_family(spec, complex(math.cos(phi), math.sin(phi)))
    raise ValueError("rotation of sampled potentials is not supported")


# --------------------------------------------------------------------------
# support radius helper

def infer_support_radius(dimension, kind):
    """Smallest radius outside which ``kind`` vanishes identically."""
    if isinstance(kind, Radial):
        lo, hi = kind.profile.support
        return float(max(abs(lo), abs(hi)))
    if isinstance(kind, SeparableAngular):
        rho_max = max(abs(t) for t in kind.v1.support)
        if dimension == 2:
            return float(rho_max)
        z_max = max(abs(t) for t in kind.v2.support)
        return float(math.hypot(rho_max, z_max))
    vals = np.asarray(kind.values)
    mask = np.abs(vals) > 0
    if not mask.any():
        return float(max(max(abs(a[0]), abs(a[-1])) for a in kind.axes))
    grids = np.meshgrid(*[np.asarray(a) for a in kind.axes], indexing="ij")
    r2 = sum(g ** 2 for g in grids)
    # a cell with a nonzero node spreads up to one spacing further out
    pad = max(float(np.max(np.diff(a))) for a in kind.axes)
    return float(math.sqrt(np.max(r2[mask]))) + pad * math.sqrt(dimension)


# --------------------------------------------------------------------------
# parsing and serialization

_PROFILE_KEYS = {
    "square": {"form", "amplitude_re", "amplitude_im", "interval"},
    "bump": {"form", "amplitude_re", "amplitude_im", "center", "width", "steepness"},
    "table": {"form", "nodes", "values", "values_re", "values_im", "order"},
}


def _num(doc, key, path, default=None):
    if key not in doc:
        if default is None:
            raise SchemaError(f"{path}.{key}", "missing required field")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{path}.{key}", f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise SchemaError(f"{path}.{key}", "must be finite")
    return float(v)


def _parse_profile(doc, path):
    if not isinstance(doc, Mapping):
        raise SchemaError(path, "expected a mapping")
    form = doc.get("form")
    if form not in _PROFILE_KEYS:
        raise SchemaError(f"{path}.form", f"must be one of {sorted(_PROFILE_KEYS)}, got {form!r}")
    extra = set(doc) - _PROFILE_KEYS[form]
    if extra:
        raise SchemaError(f"{path}.{sorted(extra)[0]}", f"unknown key for form {form!r}")
    if form in ("square", "bump"):
        amp = complex(_num(doc, "amplitude_re", path, 1.0), _num(doc, "amplitude_im", path, 0.0))
    try:
        if form == "square":
            iv = doc.get("interval")
            if not (isinstance(iv, (list, tuple)) and len(iv) == 2):
                raise SchemaError(f"{path}.interval", "expected [lo, hi]")
            return SquareWell(amp, (float(iv[0]), float(iv[1])))
        if form == "bump":
            return Bump(amp, _num(doc, "center", path), _num(doc, "width", path),
                        _num(doc, "steepness", path, 1.0))
        nodes = doc.get("nodes")
        if not isinstance(nodes, (list, tuple)):
            raise SchemaError(f"{path}.nodes", "expected a list")
        if "values" in doc:
            vals = [complex(v) for v in doc["values"]]
        else:
            re = doc.get("values_re")
            if re is None:
                raise SchemaError(f"{path}.values_re", "missing required field")
            im = doc.get("values_im", [0.0] * len(re))
            if len(im) != len(re):
                raise SchemaError(f"{path}.values_im", "length must match values_re")
            vals = [complex(a, b) for a, b in zip(re, im)]
        order = doc.get("order", 1)
        return Table(tuple(float(t) for t in nodes), tuple(vals), int(order))
    except SchemaError as exc:
        if exc.field.startswith(path):
            raise
        raise SchemaError(f"{path}.{exc.field}", str(exc).split(": ", 1)[-1]) from None


def _profile_doc(p):
    if isinstance(p, SquareWell):
        a = complex(p.amplitude)
        return {"form": "square", "amplitude_re": a.real, "amplitude_im": a.imag,
                "interval": [float(p.interval[0]), float(p.interval[1])]}
    if isinstance(p, Bump):
        a = complex(p.amplitude)
        return {"form": "bump", "amplitude_re": a.real, "amplitude_im": a.imag,
                "center": float(p.center), "width": float(p.width),
                "steepness": float(p.steepness)}
    vals = [complex(v) for v in p.values]
    return {"form": "table", "nodes": [float(t) for t in p.nodes],
            "values_re": [v.real for v in vals], "values_im": [v.imag for v in vals],
            "order": int(p.order)}


_TOP_KEYS = {"dimension", "kind", "m", "v1", "v2", "profile", "support_radius",
             "axes", "values_re", "values_im", "order"}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-12`` style floats (YAML 1.2 behaviour)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def load_yaml(text):
    return yaml.load(text, Loader=_Loader)


def parse_spec(doc):
    """Build a :class:`PotentialSpec` from YAML/JSON text or a mapping."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = load_yaml(doc)
        except yaml.YAMLError as exc:
            raise SchemaError("<document>", f"not valid YAML/JSON: {exc}") from None
    if not isinstance(doc, Mapping):
        raise SchemaError("<document>", "top level must be a mapping")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SchemaError(sorted(extra)[0], "unknown key")
    dim = doc.get("dimension")
    if dim not in (1, 2, 3) or isinstance(dim, bool):
        raise SchemaError("dimension", f"must be 1, 2 or 3, got {dim!r}")
    kind_name = doc.get("kind")
    if kind_name == "separable_angular":
        m = doc.get("m")
        if not isinstance(m, int) or isinstance(m, bool):
            raise SchemaError("m", f"expected an integer, got {m!r}")
        if m == 0:
            raise SchemaError(
                "m", "m = 0 is not allowed: the resonance-free construction requires "
                "m != 0 (use kind 'radial' for rotation-invariant potentials)")
        if "v1" not in doc:
            raise SchemaError("v1", "missing required field")
        v1 = _parse_profile(doc["v1"], "v1")
        v2 = None
        if dim == 3:
            if "v2" not in doc:
                raise SchemaError("v2", "missing required field for dimension 3")
            v2 = _parse_profile(doc["v2"], "v2")
        elif "v2" in doc:
            raise SchemaError("v2", "must be absent for dimension 2")
        kind = SeparableAngular(m, v1, v2)
    elif kind_name == "radial":
        if "profile" not in doc:
            raise SchemaError("profile", "missing required field")
        kind = Radial(_parse_profile(doc["profile"], "profile"))
    elif kind_name == "grid":
        axes = doc.get("axes")
        if not isinstance(axes, (list, tuple)):
            raise SchemaError("axes", "expected a list of node lists")
        if "values_re" not in doc:
            raise SchemaError("values_re", "missing required field")
        re = np.asarray(doc["values_re"], dtype=float)
        im = np.asarray(doc.get("values_im", np.zeros_like(re)), dtype=float)
        if im.shape != re.shape:
            raise SchemaError("values_im", "shape must match values_re")
        kind = Sampled(tuple(tuple(a) for a in axes), re + 1j * im, int(doc.get("order", 1)))
    else:
        raise SchemaError("kind", f"must be separable_angular, radial or grid, got {kind_name!r}")
    if "support_radius" in doc:
        R = _num(doc, "support_radius", "")
        inferred = infer_support_radius(dim, kind)
        if R < inferred * (1 - 1e-12) and not isinstance(kind, Sampled):
            raise SchemaError("support_radius",
                              f"{R} is smaller than the profile support {inferred}")
    else:
        R = infer_support_radius(dim, kind)
    return PotentialSpec(dim, kind, R)


def serialize_spec(spec):
    """Mapping form of ``spec``; ``parse_spec`` inverts it exactly."""
    k = spec.kind
    out = {"dimension": spec.dimension}
    if isinstance(k, SeparableAngular):
        out.update(kind="separable_angular", m=int(k.m), v1=_profile_doc(k.v1))
        if k.v2 is not None:
            out["v2"] = _profile_doc(k.v2)
    elif isinstance(k, Radial):
        out.update(kind="radial", profile=_profile_doc(k.profile))
    else:
        out.update(kind="grid", axes=[list(a) for a in k.axes],
                   values_re=k.values.real.tolist(), values_im=k.values.imag.tolist(),
                   order=int(k.order))
    out["support_radius"] = float(spec.support_radius)
    return out


def dump_spec(spec):
    """Canonical JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(serialize_spec(spec), sort_keys=True)
