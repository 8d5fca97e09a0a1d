"""Exact Stokes, connection and origin-monodromy matrices.

Everything in this module is integer or rational arithmetic over the chain
algebra of relative contour classes.  The basis ``{C_k^r}`` consists of the
steepest-descent contours of the right half-plane; loops around a cut, loops
around poles and pole-connecting stems are integer combinations of them:

* the loop around cut ``[P_a, P_b]`` (counterclockwise on its lower sheet)
  is ``C_a - C_b``;
* each ``C_k`` runs from the pole on the lower sheet of its cut to the pole
  on the upper sheet, so stems between poles are sums of the even-indexed
  contours along a path in the sheet graph;
* a full counterclockwise loop in the base around everything is trivial, so
  the loops around all poles sum to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .covering import Covering, stokes_rays
from .errors import (
    AssumptionViolated,
    BasisDecompositionUnavailable,
    ConsistencyFailure,
)

S0_BLOCK = ((1, 0), (-2, 1))
A_BLOCK = ((-1, 1), (1, -1))


# ----------------------------------------------------------------------------
# exact matrix helpers (object arrays of python ints / Fractions)
# ----------------------------------------------------------------------------

def int_matrix(rows) -> np.ndarray:
    return np.array([[int(v) for v in row] for row in rows], dtype=object)


def identity_int(n: int) -> np.ndarray:
    return int_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])


def mat_inv_exact(m: np.ndarray) -> np.ndarray:
    """Inverse over the rationals by Gauss-Jordan elimination."""
    n = m.shape[0]
    a = [[Fraction(m[i, j]) for j in range(n)] for i in range(n)]
    inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ConsistencyFailure("singular matrix in exact inverse")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        inv[col] = [v / p for v in inv[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return np.array(inv, dtype=object)


def mat_to_int(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            v = m[i, j]
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    raise ConsistencyFailure(f"non-integer entry {v}")
                v = v.numerator
            out[i, j] = int(v)
    return out


# ----------------------------------------------------------------------------
# relative chains
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RelativeChain:
    """Integer combination of basis contours with a basis tag."""

    basis: str                      # "Cr" | "Cl" | "gamma"
    coeffs: tuple[int, ...]
    label: str = ""

    def __add__(self, other: "RelativeChain") -> "RelativeChain":
        if other.basis != self.basis:
            raise ValueError("cannot add chains over different bases")
        return RelativeChain(self.basis,
                             tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "RelativeChain") -> "RelativeChain":
        return self + (-1) * other

    def __rmul__(self, c: int) -> "RelativeChain":
        return RelativeChain(self.basis, tuple(int(c) * v for v in self.coeffs))

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=object)


def chain(basis: str, n: int, entries: dict[int, int], label: str = "") -> RelativeChain:
    v = [0] * n
    for k, c in entries.items():
        v[k] += int(c)
    return RelativeChain(basis, tuple(v), label)


def rebase_l_to_r(ch: RelativeChain, S: np.ndarray) -> RelativeChain:
    """(C^l_1..C^l_n) = (C^r_1..C^r_n) S, so coordinates map by v -> S v."""
    if ch.basis != "Cl":
        raise ValueError("expected a C^l chain")
    v = S @ ch.as_array()
    return RelativeChain("Cr", tuple(int(x) for x in v), ch.label)


def rebase_r_to_l(ch: RelativeChain, S: np.ndarray) -> RelativeChain:
    if ch.basis != "Cr":
        raise ValueError("expected a C^r chain")
    v = mat_inv_exact(S) @ ch.as_array()
    out = []
    for x in v:
        x = Fraction(x)
        if x.denominator != 1:
            raise ConsistencyFailure("rebased chain is not integral")
        out.append(x.numerator)
    return RelativeChain("Cl", tuple(out), ch.label)


# ----------------------------------------------------------------------------
# Stokes matrix
# ----------------------------------------------------------------------------

def _require_cut_structure(cov: Covering) -> None:
    if any(ni > 0 for ni in cov.infinity_indices):
        raise AssumptionViolated(
            "Stokes block rules require unramified points over infinity")
    if cov.n % 2 != 0 or len(cov.cut_sheets) != cov.n // 2:
        raise AssumptionViolated("cuts must pair consecutive ramification points")


def stokes_matrix(cov: Covering) -> np.ndarray:
    """n x n integer Stokes matrix assembled from 2x2 blocks.

    Diagonal blocks are ``[[1,0],[-2,1]]``.  For cuts c_J < c_I the
    sub-diagonal block (I, J) is A, -A, -2A or 0 depending on how the two
    cuts share sheets, where A = [[-1,1],[1,-1]]:

    * -2A when the cuts join the same pair of sheets;
    * 0 when they are sheet-disjoint;
    * A when the later cut hangs off the earlier one's upper sheet from
      above, or off its lower sheet from below; -A in the opposite cases.
    """
    _require_cut_structure(cov)
    ncuts = cov.n // 2
    S = identity_int(cov.n)
    for I in range(ncuts):
        S[2 * I + 1, 2 * I] = -2
        for J in range(I):
            lo_j, up_j = cov.cut_sheets[J]
            lo_i, up_i = cov.cut_sheets[I]
            shared = {lo_i, up_i} & {lo_j, up_j}
            if len(shared) == 2:
                blk = [[-2 * v for v in row] for row in A_BLOCK]
            elif not shared:
                continue
            else:
                s = shared.pop()
                other = up_i if lo_i == s else lo_i
                if s == up_j:
                    sign = 1 if other > up_j else -1
                else:
                    sign = 1 if other < lo_j else -1
                blk = [[sign * v for v in row] for row in A_BLOCK]
            for r in range(2):
                for c in range(2):
                    S[2 * I + r, 2 * J + c] = blk[r][c]
    return S


def stokes_matrix_two_fold_sweep(cov: Covering) -> np.ndarray:
    """Independent derivation of S for two-fold coverings.

    The clockwise half-turn of ``hat C_j^r`` towards ``hat C_j^l`` crosses
    every later cut; each crossing adds twice the cut loop on the sheet the
    tail currently lies on, which alternates with j.  The contour's own cut
    contributes ``-2 C_{j+1}`` when j is the first point of its cut.
    """
    if cov.degree != 2:
        raise AssumptionViolated("sweep rule implemented for two-fold coverings")
    n = cov.n
    S = identity_int(n)
    for j in range(n):
        sign = 1 if j % 2 == 0 else -1
        if j % 2 == 0:
            S[j + 1, j] += -2
        for t in range(j // 2 + 1, n // 2):
            S[2 * t, j] += 2 * sign
            S[2 * t + 1, j] += -2 * sign
    return S


# ----------------------------------------------------------------------------
# origin bases in chain coordinates
# ----------------------------------------------------------------------------

def _sheet_tree(cov: Covering) -> dict[int, tuple[int, int, int]]:
    """Spanning tree of the sheet graph preferring later cuts.

    Returns parent[s] = (parent_sheet, cut_index, direction) with direction
    +1 when the tree edge goes lower -> upper from parent to s.
    """
    root = cov.infinity_sheets[0][0]
    parent: dict[int, tuple[int, int, int]] = {root: (root, -1, 0)}
    edges = sorted(range(len(cov.cut_sheets)), reverse=True)
    changed = True
    while changed:
        changed = False
        for t in edges:
            lo, up = cov.cut_sheets[t]
            if lo in parent and up not in parent:
                parent[up] = (lo, t, +1)
                changed = True
            elif up in parent and lo not in parent:
                parent[lo] = (up, t, -1)
                changed = True
    if len(parent) != cov.degree:
        raise BasisDecompositionUnavailable("sheet graph is disconnected")
    return parent


def _tree_path(parent, s_from: int, s_to: int) -> list[tuple[int, int]]:
    """Edges (cut, direction) along the tree path s_from -> s_to; direction
    is +1 when the edge is traversed lower sheet -> upper sheet."""

    def chain_to_root(s):
        out = [s]
        while parent[s][1] != -1:
            s = parent[s][0]
            out.append(s)
        return out

    ancestors_b = set(chain_to_root(s_to))
    common = next(s for s in chain_to_root(s_from) if s in ancestors_b)
    path = []
    s = s_from
    while s != common:
        p, t, d = parent[s]
        path.append((t, -d))          # child -> parent reverses the edge
        s = p
    down = []
    s = s_to
    while s != common:
        p, t, d = parent[s]
        down.append((t, d))           # parent -> child keeps the edge sense
        s = p
    path.extend(reversed(down))
    return path


def _cut_loop(cov: Covering, t: int, sheet: int) -> dict[int, int]:
    """Counterclockwise loop around cut t on the given sheet, in C^r coords."""
    lo, up = cov.cut_sheets[t]
    sign = 1 if sheet == lo else -1
    return {2 * t: sign, 2 * t + 1: -sign}


def gamma_basis_chains(cov: Covering) -> list[RelativeChain]:
    """Origin basis (a_1, b_1, ..., a_g, b_g, V_1..V_m, W_01..W_0m) in C^r
    coordinates, for coverings without ramification over infinity."""
    _require_cut_structure(cov)
    n = cov.n
    parent = _sheet_tree(cov)
    tree_cuts = {parent[s][1] for s in parent if parent[s][1] != -1}
    out: list[RelativeChain] = []

    # cycle pairs from the non-tree cuts
    nontree = [t for t in range(len(cov.cut_sheets)) if t not in tree_cuts]
    if len(nontree) != cov.genus:
        raise BasisDecompositionUnavailable("cycle count does not match genus")
    for idx, t in enumerate(sorted(nontree)):
        out.append(chain("Cr", n, {2 * t: 1, 2 * t + 1: -1}, f"a({idx + 1})"))
        if cov.degree == 2:
            g = cov.genus
            ent = {j: (1 if j % 2 == 1 else -1) for j in range(2 * t + 1, 2 * g + 1)}
            out.append(chain("Cr", n, ent, f"b({idx + 1})"))
        else:
            lo, up = cov.cut_sheets[t]
            ent = {2 * t + 1: 1}
            for (tc, d) in _tree_path(parent, up, lo):
                ent[2 * tc + 1] = ent.get(2 * tc + 1, 0) + d
            out.append(chain("Cr", n, ent, f"b({idx + 1})"))

    # pole loops V_i, i = 1..m
    for i in range(1, cov.m + 1):
        s = cov.infinity_sheets[i][0]
        ent: dict[int, int] = {}
        for t in range(len(cov.cut_sheets)):
            if s in cov.cut_sheets[t]:
                for kk, vv in _cut_loop(cov, t, s).items():
                    ent[kk] = ent.get(kk, 0) - vv
        out.append(chain("Cr", n, ent, f"V({i})"))

    # pole stems W_0i: each C_{2t+1} runs lower-sheet pole -> upper-sheet pole
    s0 = cov.infinity_sheets[0][0]
    for i in range(1, cov.m + 1):
        s = cov.infinity_sheets[i][0]
        ent = {}
        for (tc, d) in _tree_path(parent, s0, s):
            ent[2 * tc + 1] = ent.get(2 * tc + 1, 0) + d
        out.append(chain("Cr", n, ent, f"W(0,{i})"))
    return out


def jordan_basis_chains(cov: Covering) -> list[RelativeChain]:
    """Jordan basis (a, b pairs; N V_k and the pole-star stems) in C^r
    coordinates.  The normalization of the odd entries is the degree N."""
    gamma = gamma_basis_chains(cov)
    n = cov.n
    g, m, N = cov.genus, cov.m, cov.degree
    out = list(gamma[: 2 * g])
    Vs = gamma[2 * g: 2 * g + m]
    Ws = gamma[2 * g + m: 2 * g + 2 * m]
    for k in range(1, m + 1):
        v = N * Vs[k - 1]
        out.append(RelativeChain("Cr", v.coeffs, f"{N}*V({k})"))
        ent = (1 - N) * Ws[k - 1]
        for i in range(1, m + 1):
            if i != k:
                ent = ent + Ws[i - 1]
        out.append(RelativeChain("Cr", ent.coeffs, f"Y({2 * k})"))
    return out


def gamma_matrix(cov: Covering) -> np.ndarray:
    """Columns are the origin-basis chains in C^r coordinates."""
    chains = gamma_basis_chains(cov)
    n = cov.n
    M = identity_int(n)
    for j, ch in enumerate(chains):
        for i in range(n):
            M[i, j] = ch.coeffs[i]
    return M


def connection_matrix(cov: Covering) -> np.ndarray:
    """Columns are the Jordan-basis chains in C^r coordinates."""
    chains = jordan_basis_chains(cov)
    n = cov.n
    C = identity_int(n)
    for j, ch in enumerate(chains):
        for i in range(n):
            C[i, j] = ch.coeffs[i]
    return C


# ----------------------------------------------------------------------------
# monodromy around the origin
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RootOfUnityEntry:
    """Exact value -exp(2*pi*i*num/den)."""

    num: int
    den: int

    def simplify(self):
        num, den = self.num % self.den, self.den
        g = math.gcd(num, den)
        num, den = num // g, den // g
        if den == 1:
            return -1
        if den == 2:
            return 1
        return RootOfUnityEntry(num, den)

    def value(self) -> complex:
        return -np.exp(2j * np.pi * self.num / self.den)


def monodromy_tilde(cov: Covering) -> np.ndarray:
    """Monodromy of the origin solution over the gamma basis, exactly.

    Cycles and pole loops only pick up the global sign of 1/sqrt(z); a stem
    into pole i gains the loops 2 V_i + sum_{j != i} V_j; with ramification
    over infinity the around-pole contours permute cyclically in groups.
    """
    if all(ni == 0 for ni in cov.infinity_indices):
        g, m, n = cov.genus, cov.m, cov.n
        T = identity_int(n)
        for k in range(1, m + 1):
            col = 2 * g + m + (k - 1)
            T[2 * g + (k - 1), col] += 2
            for i in range(1, m + 1):
                if i != k:
                    T[2 * g + (i - 1), col] += 1
        return mat_to_int(-1 * T)
    return _monodromy_tilde_ramified(cov)


def _monodromy_tilde_ramified(cov: Covering) -> np.ndarray:
    """Gamma-basis monodromy when some n_i > 0.

    Basis order: a/b pairs, V_1..V_m, W_01..W_0m, then T_{i;alpha} groups for
    i = 0..m (only indices with n_i > 0 contribute contours).
    """
    g, m = cov.genus, cov.m
    n_i = cov.infinity_indices
    labels: list[tuple] = []
    for k in range(1, g + 1):
        labels += [("a", k), ("b", k)]
    labels += [("V", i) for i in range(1, m + 1)]
    labels += [("W", i) for i in range(1, m + 1)]
    for i in range(m + 1):
        labels += [("T", i, a) for a in range(1, n_i[i] + 1)]
    n = len(labels)
    if n != cov.n:
        raise AssumptionViolated("basis size does not match the dimension")
    index = {lab: i for i, lab in enumerate(labels)}

    def add(vec, lab, c):
        vec[index[lab]] += c

    T = [[0] * n for _ in range(n)]
    for j, lab in enumerate(labels):
        col = [0] * n
        if lab[0] in ("a", "b", "V"):
            col[j] = 1
        elif lab[0] == "W":
            k = lab[1]
            col[j] = 1
            # minus X_0 plus X_k, with X_i the first around-pole contour
            # at pole i, or the pole loop when n_i = 0
            if n_i[0] > 0:
                add(col, ("T", 0, 1), -1)
            else:
                for i in range(1, m + 1):     # V_0 = -sum V_i
                    add(col, ("V", i), +1)
            if n_i[k] > 0:
                add(col, ("T", k, 1), +1)
            else:
                add(col, ("V", k), +1)
        else:
            _, i, a = lab
            q = n_i[i]
            if a < q:
                add(col, ("T", i, a + 1), 1)
            else:
                # last contour maps to the closing element of the group
                if i != 0:
                    add(col, ("V", i), 1)
                    for s in range(1, q + 1):
                        add(col, ("T", i, s), -1)
                else:
                    for s in range(1, q + 1):
                        add(col, ("T", 0, s), -1)
                    for ii in range(1, m + 1):
                        add(col, ("V", ii), -1)
        for r in range(n):
            T[r][j] = -col[r]
    return int_matrix(T)


def monodromy_jordan(cov: Covering) -> np.ndarray:
    """Jordan form of the origin monodromy: size-1 blocks -1 for each cycle,
    size-2 blocks -1 for each pole pair, and -exp(2*pi*i*alpha/(n_i+1))."""
    g, m = cov.genus, cov.m
    n = cov.n
    M = np.zeros((n, n), dtype=object)
    pos = 0
    for _ in range(2 * g):
        M[pos, pos] = -1
        pos += 1
    for _ in range(m):
        M[pos, pos] = -1
        M[pos, pos + 1] = 1
        M[pos + 1, pos + 1] = -1
        pos += 2
    for i in range(m + 1):
        q = cov.infinity_indices[i] + 1
        for a in range(1, q):
            M[pos, pos] = RootOfUnityEntry(a, q).simplify()
            pos += 1
    for i in range(n):
        for j in range(n):
            if not isinstance(M[i, j], RootOfUnityEntry) and M[i, j] == 0:
                M[i, j] = 0
    return M


def predicted_spectrum(cov: Covering, doubles: bool = False) -> list[Fraction]:
    """Eigenvalue multiset of the coefficient matrix V as exact fractions."""
    g, m = cov.genus, cov.m
    mu = [Fraction(1, 2)] * (g + m) + [Fraction(-1, 2)] * (g + m)
    for i, ni in enumerate(cov.infinity_indices):
        for a in range(1, ni + 1):
            mu.append(Fraction(a, ni + 1) - Fraction(1, 2))
    if doubles:
        mu = mu + mu
    return sorted(mu)


# ----------------------------------------------------------------------------
# assembled data and consistency checks
# ----------------------------------------------------------------------------

@dataclass
class MonodromyData:
    S: np.ndarray
    C: np.ndarray | None
    M_tilde: np.ndarray | None
    M0: np.ndarray
    mu: list[Fraction]
    R: None = None                 # resonant block: not computed here
    gamma: np.ndarray | None = None


def monodromy_at_zero(cov: Covering) -> tuple[np.ndarray, np.ndarray]:
    return monodromy_tilde(cov), monodromy_jordan(cov)


def compute_monodromy_data(cov: Covering) -> MonodromyData:
    mu = predicted_spectrum(cov)
    M0 = monodromy_jordan(cov)
    if all(ni == 0 for ni in cov.infinity_indices):
        S = stokes_matrix(cov)
        C = connection_matrix(cov)
        Mt = monodromy_tilde(cov)
        Cg = gamma_matrix(cov)
        return MonodromyData(S=S, C=C, M_tilde=Mt, M0=M0, mu=mu, gamma=Cg)
    Mt = monodromy_tilde(cov)
    S = identity_int(cov.n) if cov.n == 1 else None
    return MonodromyData(S=S, C=None, M_tilde=Mt, M0=M0, mu=mu)


def check_consistency(cov: Covering, data: MonodromyData | None = None) -> dict:
    """Exact verification of the relations between S, C, M_tilde and M0.

    Checks, over the rationals: M0 = C^{-1} S^T S^{-1} C, the same relation
    for the gamma-basis monodromy, triangularity and the vanishing pattern
    of S against the Stokes rays, and the eigenvalues of M0 against the
    predicted spectrum.
    """
    if data is None:
        data = compute_monodromy_data(cov)
    report = {}
    S = data.S
    if S is None or data.C is None:
        raise ConsistencyFailure("consistency check needs S and C")
    n = S.shape[0]
    for i in range(n):
        if S[i, i] != 1:
            raise ConsistencyFailure("Stokes diagonal is not one")
        for j in range(i + 1, n):
            if S[i, j] != 0:
                raise ConsistencyFailure("Stokes matrix is not lower triangular")
    line = cov.line
    for (i, j, d) in stokes_rays(cov):
        if i != j and line.in_right(d) and S[i, j] != 0:
            raise ConsistencyFailure(
                f"S[{i},{j}] must vanish: its Stokes ray lies right of the line")
    M = S.T @ mat_inv_exact(S)
    Cinv = mat_inv_exact(data.C)
    M0_from_S = Cinv @ M @ data.C
    ok_jordan = _entries_equal(M0_from_S, data.M0)
    if not ok_jordan:
        raise ConsistencyFailure("C^{-1} S^T S^{-1} C differs from the Jordan form")
    report["jordan_relation"] = True
    if data.gamma is not None and data.M_tilde is not None:
        Gi = mat_inv_exact(data.gamma)
        Mt = Gi @ M @ data.gamma
        if not _entries_equal(Mt, data.M_tilde):
            raise ConsistencyFailure("gamma-basis monodromy mismatch")
        report["gamma_relation"] = True
    eig = sorted(_exact_eigenvalues(data.M0), key=lambda v: (v.real, v.imag))
    pred = sorted((complex(np.exp(2j * np.pi * float(m))) for m in data.mu),
                  key=lambda v: (v.real, v.imag))
    if not all(abs(a - b) < 1e-12 for a, b in zip(eig, pred)):
        raise ConsistencyFailure("eigenvalues of M0 do not match the spectrum")
    report["eigenvalues"] = True
    return report


def _entries_equal(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return False
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            x, y = a[i, j], b[i, j]
            xv = complex(x.value()) if isinstance(x, RootOfUnityEntry) else complex(float(Fraction(x)))
            yv = complex(y.value()) if isinstance(y, RootOfUnityEntry) else complex(float(Fraction(y)))
            if abs(xv - yv) > 1e-12:
                return False
    return True


def _exact_eigenvalues(M0: np.ndarray) -> list[complex]:
    out = []
    for i in range(M0.shape[0]):
        v = M0[i, i]
        out.append(complex(v.value()) if isinstance(v, RootOfUnityEntry)
                   else complex(float(v)))
    return out
