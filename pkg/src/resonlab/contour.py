"""Zeros of analytic functions in rectangles by the argument principle.

The caller supplies ``logf(lam)``, any branch of ``log f(lam)``.  Winding
numbers are sums of phase increments between boundary samples, each wrapped
to ``(-pi, pi]``; edges are bisected adaptively until every increment is
below ``max_step`` and agrees with the sum over its two halves, and the total is then confirmed by one more global
refinement.  Rectangles with nonzero winding are quadrisected; small ones
with winding one are finished by Newton's method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContourTooClose, QuadratureUnresolved

__all__ = ["Region", "ZeroFinder", "find_zeros", "winding_number"]


@dataclass(frozen=True)
class Region:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    sheet: int = 0

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate region {self}")

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min

    @property
    def diameter(self):
        return math.hypot(self.width, self.height)

    @property
    def center(self):
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def contains(self, lam, pad=0.0):
        return (self.re_min - pad <= lam.real <= self.re_max + pad
                and self.im_min - pad <= lam.imag <= self.im_max + pad)

    def corners(self):
        return (complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max))

    def expanded(self, delta):
        return Region(self.re_min - delta, self.re_max + delta, self.im_min - delta,
                      self.im_max + delta, self.sheet)

    def split(self, fx=0.5, fy=0.5):
        xm = self.re_min + fx * self.width
        ym = self.im_min + fy * self.height
        s = self.sheet
        return (Region(self.re_min, xm, self.im_min, ym, s), Region(xm, self.re_max, self.im_min, ym, s),
                Region(xm, self.re_max, ym, self.im_max, s), Region(self.re_min, xm, ym, self.im_max, s))

    def as_dict(self):
        return {"re": [self.re_min, self.re_max], "im": [self.im_min, self.im_max], "sheet": self.sheet}


def _wrap(d):
    return (d + np.pi) % (2 * np.pi) - np.pi


def _key(z):
    return (round(z.real, 12), round(z.imag, 12))


class ZeroFinder:
    """Argument-principle zero localization for one analytic function.

    Parameters
    ----------
    logf : callable
        ``lam -> log f(lam)`` (complex; the branch is irrelevant).
    tol : float
        Isolation diameter: clusters of zeros closer than this are reported
        once with their total multiplicity.
    samples_per_unit : float
        Initial boundary sampling density.
    max_step : float
        Largest accepted phase increment between neighbouring samples.
    near_zero : float
        ``|f|`` below this on a contour counts as hitting a zero.
    """

    def __init__(self, logf, tol=1e-6, samples_per_unit=4.0, max_step=np.pi / 3,
                 near_zero=1e-13, newton_size=None, max_depth=60, max_perturb=4):
        self.logf = logf
        self.tol = float(tol)
        self.density = float(samples_per_unit)
        self.max_step = float(max_step)
        self.log_near = math.log(near_zero)
        self.newton_size = newton_size
        self.max_depth = max_depth
        self.max_perturb = max_perturb
        self._values = {}
        self._edges = {}
        self.evaluations = 0

    # ---- function values -------------------------------------------------
    def value(self, z):
        k = _key(z)
        v = self._values.get(k)
        if v is None:
            try:
                v = complex(self.logf(complex(z)))
            except (ValueError, ZeroDivisionError, OverflowError):
                # log of an exact zero; the contour logic treats it as a hit
                v = complex(-math.inf, 0.0)
            if math.isnan(v.real):
                v = complex(-math.inf, 0.0)
            self.evaluations += 1
            self._values[k] = v
        return v

    # ---- boundary phases -------------------------------------------------
    def _edge(self, a, b, min_len):
        """Total phase change of f from ``a`` to ``b`` (adaptive)."""
        k = (_key(a), _key(b))
        if k in self._edges:
            return self._edges[k]
        rk = (k[1], k[0])
        if rk in self._edges:
            return -self._edges[rk]
        L = abs(b - a)
        n0 = max(8, int(math.ceil(L * self.density)))
        pts = [a + (b - a) * (i / n0) for i in range(n0 + 1)]
        total = 0.0
        stack = [(pts[i], pts[i + 1]) for i in range(n0)][::-1]
        while stack:
            p, q = stack.pop()
            vp, vq = self.value(p), self.value(q)
            if vp.real < self.log_near or vq.real < self.log_near:
                raise ContourTooClose(f"|f| below threshold near {p if vp.real < vq.real else q}")
            d = _wrap(vq.imag - vp.imag)
            m = 0.5 * (p + q)
            if abs(d) <= self.max_step:
                # the midpoint guards against a full turn hiding between samples
                vm = self.value(m)
                if vm.real < self.log_near:
                    raise ContourTooClose(f"|f| below threshold near {m}")
                halves = _wrap(vm.imag - vp.imag) + _wrap(vq.imag - vm.imag)
                if abs(halves - d) > 1e-3:
                    d = 2 * self.max_step
            if abs(d) > self.max_step:
                if abs(q - p) < min_len:
                    raise ContourTooClose(f"phase unresolved on a segment of length {abs(q - p):.2e} near {p}")
                stack.append((m, q))
                stack.append((p, m))
            else:
                total += d
        self._edges[k] = total
        return total

    def winding(self, region):
        c = region.corners()
        min_len = 1e-10 * max(1.0, region.diameter)
        total = sum(self._edge(c[i], c[(i + 1) % 4], min_len) for i in range(4))
        w = total / (2 * np.pi)
        n = int(round(w))
        if abs(w - n) > 0.05:
            raise QuadratureUnresolved(f"winding {w:.4f} is not near an integer on {region}")
        return n

    def confirmed_winding(self, region):
        """Winding confirmed at doubled sampling density."""
        n = self.winding(region)
        saved = (self.density, self.max_step, self._edges)
        try:
            self.density *= 2
            self.max_step /= 2
            self._edges = {}
            n2 = self.winding(region)
        finally:
            self.density, self.max_step, self._edges = saved
        if n2 != n:
            raise QuadratureUnresolved(f"winding changed from {n} to {n2} under refinement on {region}")
        return n

    # ---- newton ------------------------------------------------------------
    def newton(self, z0, mult, region, maxit=40):
        scale = max(1.0, abs(z0))
        h = 1e-3 * max(min(region.width, region.height), 1e-7)
        ref = self.value(z0).real
        if not math.isfinite(ref):
            return complex(z0)
        z = complex(z0)

        def F(w):
            try:
                return np.exp(complex(self.logf(w)) - ref)
            except (ValueError, ZeroDivisionError, OverflowError):
                return 0j

        for _ in range(maxit):
            f0 = F(z)
            df = (F(z + h) - F(z - h) - 1j * F(z + 1j * h) + 1j * F(z - 1j * h)) / (4 * h)
            if df == 0 or not np.isfinite(df):
                return None
            step = mult * f0 / df
            z = z - step
            if not region.contains(z, pad=0.25 * region.diameter):
                return None
            h = max(min(h, 10 * abs(step)), 1e-9 * scale)
            if abs(step) < 1e-13 * scale:
                break
        else:
            return None
        return z if region.contains(z, pad=1e-9 * scale) else None

    # ---- search ------------------------------------------------------------
    def search(self, region):
        region = self._settle(region)
        n = self.confirmed_winding(region)
        found = []
        self._search(region, n, 0, found)
        found.sort(key=lambda e: (e[0].real, e[0].imag))
        return found, region

    def _settle(self, region):
        """Perturb the outer boundary away from zeros if needed."""
        for attempt in range(self.max_perturb + 1):
            try:
                self.winding(region)
                return region
            except ContourTooClose:
                if attempt == self.max_perturb:
                    raise
                region = region.expanded(1e-3 * region.diameter * (attempt + 1) * 0.731)
        return region

    def _isolated(self, z, n):
        """True when a box of side ``tol`` around ``z`` holds all ``n`` zeros."""
        h = 0.5 * self.tol
        box = Region(z.real - h, z.real + h, z.imag - 0.937 * h, z.imag + 1.063 * h)
        try:
            return self.winding(box) == n
        except (ContourTooClose, QuadratureUnresolved):
            # |f| is negligible on the box: the cluster is tighter than tol
            return True

    def _split(self, region, n):
        """Quadrisect, nudging the split point away from zeros and aliasing."""
        offsets = (0.5, 0.4637, 0.5411, 0.4219, 0.5783)
        last = None
        for fx, fy in zip(offsets, offsets[::-1]):
            kids = region.split(fx, fy)
            try:
                ws = [self.winding(k) for k in kids]
            except ContourTooClose as exc:
                last = exc
                continue
            if sum(ws) != n:
                # a split line grazing a zero can alias its phase; move the lines
                last = QuadratureUnresolved(f"children windings {ws} do not add up to {n} on {region}")
                continue
            return list(zip(kids, ws))
        raise last

    def _search(self, region, n, depth, found):
        if n == 0:
            return
        if n < 0:
            raise QuadratureUnresolved(f"negative winding {n}: function has poles in {region}")
        newton_size = self.newton_size or max(10 * self.tol, 1e-3)
        if region.diameter <= max(newton_size, 0.05 * (1 + abs(region.center))):
            z = self.newton(region.center, n, region)
            if z is not None and (n == 1 or self._isolated(z, n)):
                found.append((z, n))
                return
        if region.diameter <= self.tol or depth >= self.max_depth:
            z = self.newton(region.center, n, region)
            found.append((region.center if z is None else z, n))
            return
        for kid, w in self._split(region, n):
            self._search(kid, w, depth + 1, found)


def find_zeros(logf, region, tol=1e-6, **kw):
    """Zeros with multiplicities of ``exp(logf)`` inside ``region``."""
    zf = ZeroFinder(logf, tol=tol, **kw)
    found, used = zf.search(region)
    return found, used, zf


def winding_number(logf, region, **kw):
    return ZeroFinder(logf, **kw).winding(region)
