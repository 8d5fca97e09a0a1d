"""Branched coverings of the sphere and their configuration data.

A covering is described by its finite simple branch points ``lam[k]`` (ordered
by descending ``Re(e^{i*phi} lam)`` for the chosen line angle ``phi``), the
branch cuts pairing consecutive ramification points, the sheets each cut
joins, and the points over infinity with their ramification indices.

Three families are supported:

* ``hyperelliptic`` two-fold coverings ``y^2 = prod(lam - lam_k)`` -- the
  numerical workhorse, branch points are free parameters;
* ``rational`` coverings given by a rational map ``lam(x) = p(x)/q(x)`` --
  pointwise kernel evaluations and, where the sheet structure can be
  determined, combinatorial data;
* ``diagram`` coverings given purely by the cut/sheet incidence table --
  enough for the exact Stokes/monodromy computations.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionViolated, DegenerateCovering, NotAdmissible

_DISTINCT_TOL = 1e-12


# ----------------------------------------------------------------------------
# line configuration
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class LineConfig:
    """Oriented separating line through the origin of the z-plane.

    ``phi`` is the angle between the line and the real axis.  The right
    half-plane is ``phi - pi < arg z < phi``, the left one its complement;
    ``l_plus`` points along ``exp(i phi)``.
    """

    phi: float

    @property
    def l_plus(self) -> complex:
        return cmath.exp(1j * self.phi)

    @property
    def l_minus(self) -> complex:
        return -cmath.exp(1j * self.phi)

    def rel_arg(self, z: complex) -> float:
        """arg(z) measured from l_plus, wrapped to (-pi, pi]."""
        a = cmath.phase(z) - self.phi
        while a <= -math.pi:
            a += 2.0 * math.pi
        while a > math.pi:
            a -= 2.0 * math.pi
        return a

    def in_right(self, z: complex) -> bool:
        return -math.pi < self.rel_arg(z) < 0.0

    def in_left(self, z: complex) -> bool:
        return 0.0 < self.rel_arg(z) < math.pi

    def sqrt(self, z: complex, flipped: bool = False) -> complex:
        """Square root with branch cut along l_minus.

        ``flipped`` selects the continuation across the cut (used when a
        solution is carried over l_minus).
        """
        w = cmath.sqrt(z * cmath.exp(-1j * self.phi)) * cmath.exp(1j * self.phi / 2.0)
        return -w if flipped else w


# ----------------------------------------------------------------------------
# surface points
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePoint:
    """Point on the covering surface.

    For rational coverings only ``x`` is set; for two-fold coverings the pair
    ``(lam, y)`` with ``y^2 = prod(lam - lam_k)`` identifies the point, with
    the sign of ``y`` resolving the sheet.
    """

    lam: complex
    y: complex | None = None
    x: complex | None = None


# ----------------------------------------------------------------------------
# covering
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Covering:
    kind: str                      # "rational" | "hyperelliptic" | "diagram"
    degree: int                    # number of sheets N
    genus: int
    branch_points: tuple[complex, ...]   # ordered per the line angle
    phi: float
    cut_list: tuple[tuple[int, int], ...]        # 0-based index pairs (2t, 2t+1)
    cut_sheets: tuple[tuple[int, int], ...]      # (lower, upper) sheet per cut
    infinity_indices: tuple[int, ...]            # n_i for infinity_0..infinity_m
    infinity_sheets: tuple[tuple[int, ...], ...]  # sheets glued at infinity_i
    # rational data (None otherwise)
    numerator: tuple[complex, ...] | None = None
    denominator: tuple[complex, ...] | None = None
    ram_x: tuple[complex, ...] | None = None     # critical points, same order
    order_permutation: tuple[int, ...] = field(default=())

    # -- basic derived quantities ---------------------------------------------

    @property
    def n(self) -> int:
        """Number of simple finite branch points (= system dimension)."""
        return len(self.branch_points)

    @property
    def m(self) -> int:
        return len(self.infinity_indices) - 1

    @property
    def line(self) -> LineConfig:
        return LineConfig(self.phi)

    @property
    def lam(self) -> np.ndarray:
        return np.asarray(self.branch_points, dtype=complex)

    def riemann_hurwitz_ok(self) -> bool:
        return self.n == 2 * self.genus + 2 * self.m + sum(self.infinity_indices)

    def min_spacing(self) -> float:
        lam = self.lam
        d = np.abs(lam[:, None] - lam[None, :])
        np.fill_diagonal(d, np.inf)
        return float(d.min()) if self.n > 1 else 1.0

    def scale(self) -> float:
        lam = self.lam
        if self.n == 0:
            return 1.0
        return max(1.0, float(np.abs(lam).max()))

    # -- two-fold sheet bookkeeping --------------------------------------------

    def branch_poly_coeffs(self) -> np.ndarray:
        """Ascending coefficients of f(lam) = prod(lam - lam_k)."""
        if self.kind != "hyperelliptic":
            raise AssumptionViolated("f(lam) only defined for two-fold coverings")
        c = np.poly(self.lam)          # descending
        return c[::-1].astype(complex)

    def f_eval(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for lk in self.branch_points:
            out = out * (z - lk)
        return out

    def y_base(self, z):
        """Branch of sqrt(f) cut exactly along the branch cuts.

        Built as a product of two-point square roots, one factor per cut:
        ``g_t = (z - c) * sqrt(1 - (e/(z-c))^2)`` has its branch cut on the
        straight segment joining the cut's branch points.  Defines sheet 0.
        """
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for (i, j) in self.cut_list:
            a, b = self.branch_points[i], self.branch_points[j]
            c = 0.5 * (a + b)
            e = 0.5 * (a - b)
            w = z - c
            out = out * w * np.sqrt(1.0 - (e / w) ** 2)
        return out

    def sheet_of(self, lam, y) -> int:
        """0 if y agrees with the principal lift, 1 otherwise."""
        y0 = self.y_base(lam)
        return 0 if abs(y - y0) <= abs(y + y0) else 1

    def lift(self, lam, sheet: int):
        y0 = self.y_base(lam)
        return y0 if sheet == 0 else -y0

    def point(self, lam: complex, sheet: int) -> SurfacePoint:
        return SurfacePoint(lam=lam, y=complex(self.lift(lam, sheet)))

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        d = {
            "kind": self.kind,
            "branch_points": [[z.real, z.imag] for z in self.branch_points],
            "phi": self.phi,
        }
        if self.kind == "rational":
            d["coeffs"] = {
                "numerator": [[z.real, z.imag] for z in self.numerator],
                "denominator": [[z.real, z.imag] for z in self.denominator],
            }
        if self.kind == "diagram":
            d["num_sheets"] = self.degree
            d["cut_sheets"] = [list(cs) for cs in self.cut_sheets]
        return d


# ----------------------------------------------------------------------------
# ordering and admissibility
# ----------------------------------------------------------------------------

def order_branch_points(points, phi: float) -> tuple[int, ...]:
    """Permutation sorting points by descending Re(e^{i phi} lam).

    Raises NotAdmissible when two projections coincide, because then the line
    at angle ``phi`` contains a Stokes ray.
    """
    pts = [complex(p) for p in points]
    proj = [(cmath.exp(1j * phi) * p).real for p in pts]
    order = tuple(sorted(range(len(pts)), key=lambda k: -proj[k]))
    scale = max(1.0, max(abs(p) for p in pts)) if pts else 1.0
    for a, b in zip(order, order[1:]):
        if abs(proj[a] - proj[b]) <= 1e-12 * scale:
            raise NotAdmissible(
                f"projections of branch points {pts[a]} and {pts[b]} coincide "
                f"at angle phi={phi}"
            )
    return order


def stokes_rays(cov: Covering) -> list[tuple[int, int, complex]]:
    """Unit directions of the rays Re[z(lam_i - lam_j)] = 0, Im[...] < 0."""
    rays = []
    lam = cov.branch_points
    for i in range(cov.n):
        for j in range(cov.n):
            if i == j:
                continue
            c = lam[i] - lam[j]
            rays.append((i, j, -1j * c.conjugate() / abs(c)))
    return rays


def is_admissible(cov: Covering, phi: float) -> bool:
    lam = cov.branch_points
    scale = cov.scale()
    for i in range(cov.n):
        for j in range(i + 1, cov.n):
            if abs((cmath.exp(1j * phi) * (lam[i] - lam[j])).real) <= 1e-12 * scale:
                return False
    return True


def stokes_gap(cov: Covering, phi: float) -> float:
    """Angular distance (mod pi) from the line to the nearest Stokes ray."""
    if cov.n < 2:
        return math.pi
    gaps = []
    for _, _, d in stokes_rays(cov):
        delta = (cmath.phase(d) - phi) % math.pi
        gaps.append(min(delta, math.pi - delta))
    return min(gaps)


# ----------------------------------------------------------------------------
# builders
# ----------------------------------------------------------------------------

def build_hyperelliptic(branch_points, phi: float = 0.0) -> Covering:
    """Two-fold covering y^2 = prod(lam - lam_k) with 2g+2 branch points.

    Cuts pair consecutive points after ordering; both sheets meet at every
    cut, the point over infinity on sheet s is infinity_s (two simple poles).
    """
    pts = [complex(p) for p in branch_points]
    if len(pts) < 2 or len(pts) % 2 != 0:
        raise DegenerateCovering("need an even number >= 2 of branch points")
    scale = max(abs(p) for p in pts)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) <= _DISTINCT_TOL * max(1.0, scale):
                raise DegenerateCovering(f"branch points {pts[i]} and {pts[j]} coincide")
    order = order_branch_points(pts, phi)
    pts = [pts[k] for k in order]
    n = len(pts)
    g = n // 2 - 1
    cuts = tuple((2 * t, 2 * t + 1) for t in range(n // 2))
    return Covering(
        kind="hyperelliptic",
        degree=2,
        genus=g,
        branch_points=tuple(pts),
        phi=phi,
        cut_list=cuts,
        cut_sheets=tuple((0, 1) for _ in cuts),
        infinity_indices=(0, 0),
        infinity_sheets=((0,), (1,)),
        order_permutation=order,
    )


def build_diagram(num_sheets: int, cut_sheets, phi: float = 0.0,
                  branch_points=None, infinity_indices=None) -> Covering:
    """Covering described by its cut/sheet incidence table only.

    ``cut_sheets[t]`` is the (unordered) pair of sheets joined by the t-th
    cut, i.e. by the branch points with indices (2t, 2t+1).  Without
    ramification over infinity each sheet s carries one simple pole,
    labelled infinity_s.  Synthetic descending real branch points are used
    when none are supplied.
    """
    cs = []
    for pair in cut_sheets:
        a, b = int(pair[0]), int(pair[1])
        if a == b or not (0 <= a < num_sheets and 0 <= b < num_sheets):
            raise DegenerateCovering(f"bad cut sheet pair {pair}")
        cs.append((min(a, b), max(a, b)))
    # connectivity of the sheet graph
    reach = {0}
    frontier = [0]
    while frontier:
        s = frontier.pop()
        for (a, b) in cs:
            for t in ((b,) if a == s else (a,) if b == s else ()):
                if t not in reach:
                    reach.add(t)
                    frontier.append(t)
    if len(reach) != num_sheets:
        raise DegenerateCovering("cut diagram does not connect all sheets")
    n = 2 * len(cs)
    g = len(cs) - num_sheets + 1
    if g < 0:
        raise DegenerateCovering("cut diagram has negative genus")
    if infinity_indices is None:
        infinity_indices = tuple(0 for _ in range(num_sheets))
        infinity_sheets = tuple((s,) for s in range(num_sheets))
    else:
        infinity_indices = tuple(int(v) for v in infinity_indices)
        k = 0
        sheets = []
        for ni in infinity_indices:
            sheets.append(tuple(range(k, k + ni + 1)))
            k += ni + 1
        if k != num_sheets:
            raise DegenerateCovering("infinity indices inconsistent with sheet count")
        infinity_sheets = tuple(sheets)
    if branch_points is None:
        branch_points = tuple(complex(n - 1 - 2 * k) for k in range(n))
    else:
        branch_points = tuple(complex(p) for p in branch_points)
        if list(order_branch_points(branch_points, phi)) != list(range(n)):
            raise AssumptionViolated("supplied branch points are not ordered for phi")
    return Covering(
        kind="diagram",
        degree=num_sheets,
        genus=g,
        branch_points=branch_points,
        phi=phi,
        cut_list=tuple((2 * t, 2 * t + 1) for t in range(len(cs))),
        cut_sheets=tuple(cs),
        infinity_indices=infinity_indices,
        infinity_sheets=infinity_sheets,
    )


def _poly_trim(c) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    nz = np.nonzero(np.abs(c) > 0)[0]
    if len(nz) == 0:
        raise DegenerateCovering("zero polynomial")
    return c[: nz[-1] + 1]


def _poly_roots_ascending(c) -> np.ndarray:
    c = _poly_trim(c)
    if len(c) == 1:
        return np.array([], dtype=complex)
    return np.roots(c[::-1])


def build_rational(numerator_coeffs, denominator_coeffs, phi: float = 0.0,
                   tol: float = 1e-12) -> Covering:
    """Genus-zero covering lam(x) = p(x)/q(x), coefficients in ascending order.

    Requires deg p > deg q so that x = infinity lies over lam = infinity.
    Finite critical points are the roots of p'q - pq'; they must be simple
    with pairwise distinct branch values.  Sheet incidence for the cuts is
    derived from the monodromy permutations when the degree exceeds two.
    """
    p = _poly_trim(numerator_coeffs)
    q = _poly_trim(denominator_coeffs)
    deg_p, deg_q = len(p) - 1, len(q) - 1
    N = max(deg_p, deg_q)
    if N < 2:
        raise DegenerateCovering("covering degree must be at least 2")
    if deg_p <= deg_q:
        raise DegenerateCovering(
            "need deg(numerator) > deg(denominator): x = infinity must lie over infinity")

    dp = np.polynomial.polynomial.polyder(p)
    dq = np.polynomial.polynomial.polyder(q) if deg_q > 0 else np.zeros(1, complex)
    num_dl = np.polynomial.polynomial.polysub(
        np.polynomial.polynomial.polymul(dp, q),
        np.polynomial.polynomial.polymul(p, dq),
    )
    crit = _poly_roots_ascending(num_dl)
    # critical points must avoid poles of lam
    poles = _poly_roots_ascending(q) if deg_q > 0 else np.array([], complex)
    crit = np.array([x for x in crit
                     if all(abs(x - s) > 1e-9 * max(1.0, abs(x)) for s in poles)])
    scale = max(1.0, float(np.abs(crit).max())) if len(crit) else 1.0
    for i in range(len(crit)):
        for j in range(i + 1, len(crit)):
            if abs(crit[i] - crit[j]) <= 1e-8 * scale:
                raise DegenerateCovering("non-simple finite branch point")

    def lam_of(x):
        return (np.polynomial.polynomial.polyval(x, p)
                / np.polynomial.polynomial.polyval(x, q))

    branch = np.array([lam_of(x) for x in crit])
    bscale = max(1.0, float(np.abs(branch).max())) if len(branch) else 1.0
    for i in range(len(branch)):
        for j in range(i + 1, len(branch)):
            if abs(branch[i] - branch[j]) <= 1e-8 * bscale:
                raise DegenerateCovering("two finite branch values coincide")

    # points over infinity: finite poles of q (by multiplicity) and x = infinity
    inf_orders = []
    used = []
    for s in poles:
        if any(abs(s - u) <= 1e-9 * max(1.0, abs(s)) for u in used):
            continue
        used.append(s)
        mult = sum(1 for t in poles if abs(t - s) <= 1e-9 * max(1.0, abs(s)))
        inf_orders.append(mult)
    inf_orders.append(deg_p - deg_q)   # order of the pole at x = infinity
    n_i = sorted((k - 1 for k in inf_orders), reverse=False)
    m = len(inf_orders) - 1
    n = len(crit)
    if n != 2 * m + sum(n_i):
        raise DegenerateCovering(
            f"Riemann-Hurwitz mismatch: {n} critical points vs m={m}, n_i={n_i}")

    order = order_branch_points(branch, phi)
    branch = branch[list(order)]
    crit = crit[list(order)]

    cut_sheets, inf_data = _rational_sheet_structure(p, q, branch, n_i, phi)
    infinity_indices, infinity_sheets = inf_data
    return Covering(
        kind="rational",
        degree=N,
        genus=0,
        branch_points=tuple(branch.tolist()),
        phi=phi,
        cut_list=tuple((2 * t, 2 * t + 1) for t in range(n // 2)) if n % 2 == 0 else (),
        cut_sheets=cut_sheets,
        infinity_indices=infinity_indices,
        infinity_sheets=infinity_sheets,
        numerator=tuple(p.tolist()),
        denominator=tuple(q.tolist()),
        ram_x=tuple(crit.tolist()),
        order_permutation=order,
    )


def _continue_fiber(p, q, path, fiber):
    """Track the full fiber lam^{-1}(zeta) along a path of base points."""
    N = len(fiber)
    cur = np.asarray(fiber, dtype=complex)
    for zeta in path:
        c = np.polynomial.polynomial.polysub(p, zeta * np.pad(q, (0, len(p) - len(q))))
        roots = np.roots(c[::-1])
        nxt = np.empty(N, complex)
        taken = np.zeros(len(roots), bool)
        for i in range(N):
            d = np.abs(roots - cur[i])
            d[taken] = np.inf
            j = int(np.argmin(d))
            taken[j] = True
            nxt[i] = roots[j]
        cur = nxt
    return cur


def _rational_sheet_structure(p, q, branch, n_i, phi):
    """Monodromy permutations around each branch point; cut sheet pairs.

    Sheets are the fiber over a base point far below the configuration (in
    the direction -i e^{i phi}), indexed so that the sheets of a common pole
    are consecutive, poles appearing in the order of their first sheet.
    """
    n = len(branch)
    centroid = branch.mean() if n else 0.0
    spread = max(1.0, float(np.abs(branch - centroid).max()) * 2.0) if n else 1.0
    base = centroid - 1j * np.exp(1j * phi) * 4.0 * spread
    c0 = np.polynomial.polynomial.polysub(
        p, base * np.pad(q, (0, len(p) - len(q))))
    fiber0 = np.sort_complex(np.roots(c0[::-1]))
    N = len(fiber0)

    def loop_path(lam_k, steps=160):
        r = 0.25 * min(
            [abs(lam_k - mu) for mu in branch if abs(mu - lam_k) > 0] or [1.0])
        out = []
        seg = 40
        for t in range(1, seg + 1):
            out.append(base + (lam_k + r - base) * t / seg)
        for t in range(1, steps + 1):
            out.append(lam_k + r * np.exp(2j * np.pi * t / steps))
        for t in range(1, seg + 1):
            out.append(lam_k + r + (base - lam_k - r) * t / seg)
        return out

    perms = []
    for k in range(n):
        end = _continue_fiber(p, q, loop_path(branch[k]), fiber0)
        perm = []
        for i in range(N):
            d = np.abs(fiber0 - end[i])
            perm.append(int(np.argmin(d)))
        if sorted(perm) != list(range(N)):
            raise DegenerateCovering("monodromy tracking failed; refine the covering")
        moved = [i for i in range(N) if perm[i] != i]
        if len(moved) != 2:
            raise DegenerateCovering("branch point is not simple under monodromy")
        perms.append((min(moved), max(moved)))

    # pole reached from each sheet: continue the fiber radially outward
    far = centroid - 1j * np.exp(1j * phi) * 400.0 * spread
    path = [base + (far - base) * t / 80 for t in range(1, 81)]
    fiber_far = _continue_fiber(p, q, path, fiber0)
    finite_poles = _poly_roots_ascending(q) if len(q) > 1 else np.array([], complex)
    pole_of_sheet = []
    for x in fiber_far:
        lab = None
        for ip, s in enumerate(finite_poles):
            if abs(x - s) < 0.05 * max(1.0, abs(s)) + 1e-6:
                lab = ("finite", ip)
        pole_of_sheet.append(lab if lab is not None else ("inf",))

    # relabel sheets: group by pole, poles ordered by first occurrence
    groups: dict = {}
    for s, lab in enumerate(pole_of_sheet):
        groups.setdefault(lab, []).append(s)
    ordered_labels = sorted(groups, key=lambda lab: min(groups[lab]))
    relabel = {}
    infinity_sheets = []
    infinity_indices = []
    next_id = 0
    for lab in ordered_labels:
        sheets = sorted(groups[lab])
        infinity_sheets.append(tuple(range(next_id, next_id + len(sheets))))
        infinity_indices.append(len(sheets) - 1)
        for s in sheets:
            relabel[s] = next_id
            next_id += 1
    if sorted(infinity_indices) != sorted(n_i):
        raise DegenerateCovering("pole incidence inconsistent with pole orders")

    cut_pairs = [tuple(sorted((relabel[a], relabel[b]))) for (a, b) in perms]
    if n % 2 == 0:
        for t in range(n // 2):
            if cut_pairs[2 * t] != cut_pairs[2 * t + 1]:
                raise AssumptionViolated(
                    "consecutive branch points cannot be joined by cuts "
                    f"(transpositions {cut_pairs[2*t]} vs {cut_pairs[2*t+1]})")
        cut_sheets = tuple(cut_pairs[2 * t] for t in range(n // 2))
    else:
        cut_sheets = ()
    return cut_sheets, (tuple(infinity_indices), tuple(infinity_sheets))


# ----------------------------------------------------------------------------
# config I/O
# ----------------------------------------------------------------------------

def covering_from_json(d: dict) -> Covering:
    kind = d.get("kind")
    phi = float(d.get("phi", 0.0))
    pts = [complex(re, im) for re, im in d.get("branch_points", [])]
    if kind == "hyperelliptic":
        return build_hyperelliptic(pts, phi)
    if kind == "rational":
        co = d.get("coeffs", {})
        num = [complex(re, im) for re, im in co.get("numerator", [])]
        den = [complex(re, im) for re, im in co.get("denominator", [[1.0, 0.0]])]
        return build_rational(num, den, phi)
    if kind == "diagram":
        return build_diagram(
            int(d["num_sheets"]), d["cut_sheets"], phi,
            branch_points=pts or None,
            infinity_indices=d.get("infinity_indices"),
        )
    raise DegenerateCovering(f"unknown covering kind {kind!r}")


def load_covering(path: str) -> Covering:
    with open(path, "r", encoding="utf-8") as fh:
        return covering_from_json(json.load(fh))
