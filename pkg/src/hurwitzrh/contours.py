"""Contour geometry on two-fold coverings.

Steepest-descent contours enter a ramification point along a projection ray,
make a full turn around the branch point (which swaps the sheets) and leave
along the same ray on the other sheet.  Cycles around cuts and the loops and
stems used near the origin are closed curves lifted by continuity.

Lifting uses two mechanisms:

* chart lift: along a projection ray from lam_k the point is
  ``(lam_k + x^2, x * h(lam))`` with ``h = sqrt(f_k)`` continued radially
  (``f_k`` has no zeros near the ray, so no cut bookkeeping is needed);
* parity lift: on closed curves the sign in ``y = parity * y_base`` flips
  exactly where the curve crosses a branch cut; flips are located on a dense
  grid once per segment.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .covering import Covering, stokes_gap
from .errors import (
    ContourCollision,
    PeriodSolveFailure,
    StokesRayCrossed,
    TailBoundViolated,
)

_GOLDEN = 0.6180339887498949


# ----------------------------------------------------------------------------
# segments
# ----------------------------------------------------------------------------

@dataclass
class PathSegment:
    """One smooth piece of a contour, parametrized over t in [0, 1].

    ``evaluate(t)`` returns (zeta, dzeta/dt, y) as arrays.
    """

    kind: str
    evaluate: callable
    start_parity: int = +1
    end_parity: int = +1


def _chart_ray(cov: Covering, k: int, theta: float, bank: float,
               s0: float, s1: float, h_grid):
    """Radial piece of a steepest-descent contour in the x-chart of P_k.

    Runs from |lam - lam_k| = s0 to s1 along the ray at angle theta, on the
    bank with arg(x) = bank.  Log-graded parametrization.
    """
    lam_k = cov.branch_points[k]
    s_grid, h_vals = h_grid
    ratio = s1 / s0

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        s = s0 * ratio ** t
        zeta = lam_k + s * cmath.exp(1j * theta)
        dzeta = s * math.log(ratio) * cmath.exp(1j * theta)
        x = np.sqrt(s) * cmath.exp(1j * bank)
        idx = np.searchsorted(s_grid, s)
        idx = np.clip(idx, 0, len(s_grid) - 1)
        h_ref = h_vals[idx]
        fk = _f_without(cov, k, zeta)
        h = np.sqrt(fk)
        flip = np.abs(h - h_ref) > np.abs(h + h_ref)
        h = np.where(flip, -h, h)
        return zeta, dzeta * np.ones_like(s), x * h

    return PathSegment(kind="ray", evaluate=evaluate)


def _chart_arc(cov: Covering, k: int, theta: float, bank: float, rho: float,
               h_at_rho: complex, direction: int = -1):
    """Full base-plane circle of radius rho around lam_k.

    In the x-chart this is a half-turn from arg(x) = bank to bank - pi
    (``direction = -1``); the contour passes to the other sheet.
    """
    lam_k = cov.branch_points[k]

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        x = math.sqrt(rho) * np.exp(1j * (bank + direction * math.pi * t))
        zeta = lam_k + x * x
        dzeta = 2.0 * x * (1j * direction * math.pi) * x
        fk = _f_without(cov, k, zeta)
        h = np.sqrt(fk)
        flip = np.abs(h - h_at_rho) > np.abs(h + h_at_rho)
        h = np.where(flip, -h, h)
        return zeta, dzeta, x * h

    return PathSegment(kind="arc", evaluate=evaluate)


def _f_without(cov: Covering, k: int, zeta):
    out = np.ones_like(np.asarray(zeta, dtype=complex))
    for j, lj in enumerate(cov.branch_points):
        if j != k:
            out = out * (zeta - lj)
    return out


def _h_grid(cov: Covering, k: int, theta: float, sigma: int,
            s0: float, s1: float, npts: int = 400):
    """sqrt(f_k) continued radially outward, anchored at sigma*psqrt(f_k(lam_k))."""
    lam_k = cov.branch_points[k]
    s = np.concatenate([[0.0], np.geomspace(s0 * 1e-3, s1, npts)])
    zeta = lam_k + s * cmath.exp(1j * theta)
    f = _f_without(cov, k, zeta)
    h = np.empty_like(f)
    h[0] = sigma * np.sqrt(f[0])
    for i in range(1, len(s)):
        cand = np.sqrt(f[i])
        h[i] = cand if abs(cand - h[i - 1]) <= abs(cand + h[i - 1]) else -cand
    return s, h


def _parity_segment(cov: Covering, base_fn, dbase_fn, start_parity: int,
                    kind: str, grid: int = 900):
    """Closed-curve piece lifted as parity * y_base with a flip table."""
    tg = (np.arange(grid + 1) + _GOLDEN) / (grid + 2)
    tg = np.concatenate([[0.0], tg, [1.0]])
    yb = cov.y_base(base_fn(tg))
    flips = []
    for i in range(1, len(tg)):
        if abs(yb[i] - yb[i - 1]) > abs(yb[i] + yb[i - 1]):
            flips.append(0.5 * (tg[i] + tg[i - 1]))
    flips_arr = np.asarray(flips)
    end_parity = start_parity * (-1) ** len(flips)

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        zeta = base_fn(t)
        nflip = np.searchsorted(flips_arr, t)
        parity = start_parity * np.where(nflip % 2 == 0, 1.0, -1.0)
        return zeta, dbase_fn(t), parity * cov.y_base(zeta)

    seg = PathSegment(kind=kind, evaluate=evaluate,
                      start_parity=start_parity, end_parity=end_parity)
    return seg


# ----------------------------------------------------------------------------
# contours
# ----------------------------------------------------------------------------

@dataclass
class Contour:
    label: str
    cov: Covering
    segments: list[PathSegment] = field(default_factory=list)
    side: str | None = None
    k: int | None = None
    eps: float = 0.0
    rho: float = 0.0
    r_max: float = 0.0
    decay: float = 0.0
    closed: bool = False
    center: complex = 0.0
    radius: float = 0.0

    def export_rows(self, per_segment: int = 200):
        rows = []
        for si, seg in enumerate(self.segments):
            t = np.linspace(0.0, 1.0, per_segment)
            zeta, _, y = seg.evaluate(t)
            zeta = np.atleast_1d(zeta)
            y = np.atleast_1d(y)
            y0 = self.cov.y_base(zeta) if self.cov.kind == "hyperelliptic" else None
            for i in range(len(t)):
                if y0 is None:
                    sheet = 0
                else:
                    sheet = 0 if abs(y[i] - y0[i]) <= abs(y[i] + y0[i]) else 1
                rows.append((si + t[i], float(zeta[i].real), float(zeta[i].imag), sheet))
        return rows


def a3_signs(cov: Covering) -> np.ndarray:
    """Sign bit per ramification point fixing the branch of the local chart.

    The bank arg(x_k) = 3*pi/4 - phi/2 must lie on the lower sheet; the sign
    multiplies psqrt(f_k(lam_k)) in every chart-frame evaluation.
    """
    if cov.kind != "hyperelliptic":
        raise TypeError("a3_signs needs a two-fold covering")
    sig = np.ones(cov.n, dtype=int)
    delta = 1e-4 * cov.min_spacing()
    for k in range(cov.n):
        bank = 0.75 * math.pi - 0.5 * cov.phi
        x = math.sqrt(delta) * cmath.exp(1j * bank)
        zeta = cov.branch_points[k] + x * x
        h0 = np.sqrt(complex(_f_without(cov, k, np.array([zeta]))[0]))
        y_plus = x * h0
        y_lower = cov.lift(np.array([zeta]), 0)[0]
        sig[k] = 1 if abs(y_plus - y_lower) <= abs(y_plus + y_lower) else -1
    return sig


def ray_angle(phi: float, side: str, eps: float = 0.0) -> float:
    base = 1.5 * math.pi - phi if side == "r" else 0.5 * math.pi - phi
    return base - eps


def bank_angle(phi: float, side: str, eps: float = 0.0) -> float:
    base = 0.75 * math.pi - 0.5 * phi if side == "r" else 0.25 * math.pi - 0.5 * phi
    return base - 0.5 * eps


def build_c_side(cov: Covering, k: int, side: str, *, eps: float = 0.0,
                 decay: float = 1.0, rho: float | None = None,
                 tail_tol: float = 1e-13) -> Contour:
    """Steepest-descent contour through P_k for the given side of the line.

    ``decay`` is the guaranteed rate -Re{z e^{i theta}} / |lam - lam_k| for
    the z values the contour will serve; it fixes the truncation radius.
    """
    if side not in ("r", "l"):
        raise ValueError("side must be 'r' or 'l'")
    if cov.kind != "hyperelliptic":
        raise TypeError("numerical contours require a two-fold covering")
    theta = ray_angle(cov.phi, side, eps)
    bank = bank_angle(cov.phi, side, eps)
    lam_k = cov.branch_points[k]
    if rho is None:
        rho = 0.1 * cov.min_spacing()

    direction = cmath.exp(1j * theta)
    for j, lj in enumerate(cov.branch_points):
        if j == k:
            continue
        s = ((lj - lam_k) / direction).real
        dist = abs(lj - (lam_k + max(s, 0.0) * direction))
        if dist < 0.5 * rho:
            raise ContourCollision(
                f"projection ray from branch point {k} passes within {dist:.3g} "
                f"of branch point {j}")

    if decay <= 0.0:
        raise TailBoundViolated("non-positive decay rate along the contour")
    width = -math.log(tail_tol) + 10.0
    r_max = rho + width / decay
    if r_max > 1e6:
        raise TailBoundViolated(f"truncation radius {r_max:.3g} too large")

    sigma = a3_signs(cov)[k]
    grid = _h_grid(cov, k, theta, sigma, rho, r_max)
    h_at_rho = grid[1][np.searchsorted(grid[0], rho)]
    seg_in = _chart_ray(cov, k, theta, bank, r_max, rho, grid)
    seg_arc = _chart_arc(cov, k, theta, bank, rho, h_at_rho)
    seg_out = _chart_ray(cov, k, theta, bank - math.pi, rho, r_max, grid)
    return Contour(
        label=f"C{side}({k + 1})", cov=cov,
        segments=[seg_in, seg_arc, seg_out],
        side=side, k=k, eps=eps, rho=rho, r_max=r_max, decay=decay,
    )


def build_c_system(cov: Covering, side: str, z_values, *, eps: float = 0.0,
                   rho: float | None = None) -> list[Contour]:
    """All n contours of one side, truncated for the given z samples."""
    theta = ray_angle(cov.phi, side, eps)
    decay = min(
        -(z * cmath.exp(1j * theta)).real for z in np.atleast_1d(z_values))
    return [build_c_side(cov, k, side, eps=eps, decay=decay, rho=rho)
            for k in range(cov.n)]


def deform_for_ray(contour: Contour, eps: float) -> Contour:
    """Clockwise eps-turn of the projection ray (eps > 0 continues the
    solution counterclockwise past the line)."""
    if eps == 0.0:
        return contour
    new_eps = contour.eps + eps
    gap = stokes_gap(contour.cov, contour.cov.phi)
    if abs(new_eps) >= gap:
        raise StokesRayCrossed(
            f"turn {new_eps:.4f} reaches the Stokes ray gap {gap:.4f}")
    return build_c_side(contour.cov, contour.k, contour.side,
                        eps=new_eps, decay=contour.decay, rho=contour.rho or None)


# ----------------------------------------------------------------------------
# cycles and origin-basis contours (two-fold geometry)
# ----------------------------------------------------------------------------

def a_cycle(cov: Covering, t: int, *, radius_factor: float = 0.4,
            orientation: int = 1, sheet: int = 0) -> Contour:
    """Loop around the t-th cut, counterclockwise on the base sheet.

    Together with the default b-cycle orientation this makes the period
    matrix have positive-definite imaginary part.
    """
    i, j = cov.cut_list[t]
    a, b = cov.branch_points[i], cov.branch_points[j]
    c = 0.5 * (a + b)
    half = 0.5 * abs(a - b)
    others = [abs(cov.branch_points[s] - c)
              for s in range(cov.n) if s not in (i, j)]
    clear = min(others) if others else half + 2.0
    if clear <= half * 1.05:
        raise PeriodSolveFailure(f"cut {t} too close to another branch point")
    r = half + radius_factor * (clear - half)

    def base(tt):
        return c + r * np.exp(2j * math.pi * orientation * np.asarray(tt))

    def dbase(tt):
        return (2j * math.pi * orientation * r
                * np.exp(2j * math.pi * orientation * np.asarray(tt)))

    parity = 1 if sheet == 0 else -1
    seg = _parity_segment(cov, base, dbase, parity, "circle")
    if seg.end_parity != seg.start_parity:
        raise PeriodSolveFailure("a-cycle lift does not close up")
    return Contour(label=f"a({t + 1})", cov=cov, segments=[seg], closed=True,
                   center=c, radius=r)


def b_cycle(cov: Covering, t: int, *, orientation: int = 1) -> Contour:
    """Cycle crossing cuts t and g+1: an ellipse enclosing the branch points
    with indices 2t+1 .. 2g (0-based), lifted by continuity."""
    g = cov.genus
    lo, hi = 2 * t + 1, 2 * g
    pts = np.array(cov.branch_points[lo:hi + 1])
    p0, p1 = cov.branch_points[lo], cov.branch_points[hi]
    c = 0.5 * (p0 + p1)
    span = 0.5 * abs(p1 - p0)
    u = (p1 - p0) / abs(p1 - p0) if abs(p1 - p0) > 0 else 1.0
    excl = [cov.branch_points[s] for s in range(cov.n) if not lo <= s <= hi]

    def seg_dist(q):
        w = (q - c) / u
        dx = max(abs(w.real) - span, 0.0)
        return math.hypot(dx, w.imag)

    clear = min(seg_dist(q) for q in excl)
    if clear <= 1e-9:
        raise PeriodSolveFailure("no room for the b-cycle ellipse")
    a_semi = span + 0.55 * clear
    b_semi = 0.55 * clear

    start = 0.7                        # keep the start point off the cuts

    def base(tt):
        ang = 2.0 * math.pi * orientation * np.asarray(tt) + start
        return c + u * (a_semi * np.cos(ang) + 1j * b_semi * np.sin(ang))

    def dbase(tt):
        ang = 2.0 * math.pi * orientation * np.asarray(tt) + start
        return u * 2.0 * math.pi * orientation * (
            -a_semi * np.sin(ang) + 1j * b_semi * np.cos(ang))

    def inside(q):
        w = (q - c) / u
        return (w.real / a_semi) ** 2 + (w.imag / b_semi) ** 2 < 1.0

    if not all(inside(q) for q in pts) or any(inside(q) for q in excl):
        raise PeriodSolveFailure("b-cycle ellipse does not separate the cuts")

    seg = _parity_segment(cov, base, dbase, +1, "ellipse")
    if seg.end_parity != seg.start_parity:
        raise PeriodSolveFailure("b-cycle lift does not close up")
    return Contour(label=f"b({t + 1})", cov=cov, segments=[seg], closed=True)


def infinity_loop(cov: Covering, *, sheet: int = 1, orientation: int = -1) -> Contour:
    """Loop around the point over infinity on the given sheet (two-fold).

    Clockwise in the base plane = counterclockwise around infinity.
    """
    lam = cov.lam
    c = lam.mean()
    r = 2.0 * float(np.abs(lam - c).max()) + 1.0

    def base(tt):
        return c + r * np.exp(2j * math.pi * orientation * np.asarray(tt))

    def dbase(tt):
        return (2j * math.pi * orientation * r
                * np.exp(2j * math.pi * orientation * np.asarray(tt)))

    parity = 1 if sheet == 0 else -1
    seg = _parity_segment(cov, base, dbase, parity, "circle")
    return Contour(label="V(1)", cov=cov, segments=[seg], closed=True)


def infinity_stem(cov: Covering, z: complex, *, r_max: float = 40.0) -> Contour:
    """Path from the pole on sheet 0 to the pole on sheet 1 (two-fold),
    entering and leaving along the direction where exp(z*lam) decays."""
    alpha = math.pi - cmath.phase(z)
    k = cov.n - 1
    sigma = a3_signs(cov)[k]
    rho = 0.1 * cov.min_spacing()
    grid = _h_grid(cov, k, alpha, sigma, rho, r_max)
    h_at_rho = grid[1][np.searchsorted(grid[0], rho)]
    bank = 0.5 * alpha
    seg_in = _chart_ray(cov, k, alpha, bank, r_max, rho, grid)
    seg_arc = _chart_arc(cov, k, alpha, bank, rho, h_at_rho)
    seg_out = _chart_ray(cov, k, alpha, bank - math.pi, rho, r_max, grid)
    cont = Contour(label="W(0,1)", cov=cov, segments=[seg_in, seg_arc, seg_out])
    cont.r_max = r_max
    cont.rho = rho
    return cont


def build_gamma_basis(cov: Covering, z: complex) -> list[Contour]:
    """Geometric version of the origin contour basis for two-fold coverings:
    a- and b-cycles, the loop around the sheet-1 pole, and the stem joining
    the two poles."""
    if cov.kind != "hyperelliptic":
        raise TypeError("geometric basis requires a two-fold covering")
    out = []
    for t in range(cov.genus):
        out.append(a_cycle(cov, t))
        out.append(b_cycle(cov, t))
    out.append(infinity_loop(cov))
    out.append(infinity_stem(cov, z))
    return out


def build_jordan_basis(cov: Covering, z: complex) -> list[Contour]:
    """Jordan contour basis (two-fold): cycles, degree * V, minus the stem."""
    base = build_gamma_basis(cov, z)
    v = base[-2]
    w = base[-1]
    v.label = f"{cov.degree}*V(1)"
    w.label = "-W(0,1)"
    return base[:-2] + [v, w]
