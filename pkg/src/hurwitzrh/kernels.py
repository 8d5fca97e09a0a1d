"""Bidifferential kernels on two-fold and rational coverings.

On a two-fold covering ``y^2 = f(lam)`` the normalized symmetric kernel with
a double pole on the diagonal and vanishing a-periods is realized as

    W = W0 + sum_{kl} c_kl  what_k(P) what_l(Q),

where ``W0`` is the classical algebraic kernel

    W0(P, Q) = [F(lam_P, lam_Q) + 2 y_P y_Q] / [4 (lam_P - lam_Q)^2 y_P y_Q]
               dlam_P dlam_Q,
    F(u, v)  = sum_{i=0}^{g+1} (u v)^i (2 f_{2i} + f_{2i+1} (u + v)),

``what_k = lam^{k-1} dlam / y`` span the holomorphic differentials, and the
symmetric matrix ``c`` is solved from the vanishing of the a-periods.  All
values are reported as coefficients against explicit frames: the coordinate
frame ``dlam`` at ordinary points and the distinguished chart
``x_k = sqrt(lam - lam_k)`` at ramification points.

Derived kernels (the deformed kernel with parameter q, and the two kernels
entering the real-double structure) are finite-rank modifications of W by
holomorphic differentials and are evaluated from the same precomputed data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import a3_signs, a_cycle, b_cycle
from .covering import Covering
from .errors import (
    DiagonalSingularity,
    ExpansionFailure,
    OnDeformationDivisor,
    PeriodSolveFailure,
    SpectrumMismatch,
)
from .monodromy import predicted_spectrum
from .quadrature import integrate_vector


# ----------------------------------------------------------------------------
# containers
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class HolomorphicBasis:
    """Normalized holomorphic differentials: a-period matrix of the raw
    monomial differentials, the normalizing change of basis, and the values
    at the ramification points in the distinguished charts."""

    a_periods_raw: np.ndarray     # A[m, k] = oint_{a_m} lam^{k-1} dlam / y
    normalizer: np.ndarray        # omega_j = sum_k normalizer[k, j] what_k
    at_ram: np.ndarray            # Phi[i, j] = omega_j(P_i), chart frame


@dataclass(frozen=True)
class RiemannMatrix:
    matrix: np.ndarray

    def imag_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix.imag)


@dataclass(frozen=True)
class RotationData:
    gamma: np.ndarray
    v: np.ndarray
    u: np.ndarray
    doubles: bool = False


# ----------------------------------------------------------------------------
# two-fold kernels
# ----------------------------------------------------------------------------

class HyperellipticKernels:
    """Evaluator bundle for one two-fold covering.

    Precomputes the chart signs, the period data and the a-period correction
    once; all evaluations afterwards are closed-form.
    """

    def __init__(self, cov: Covering, period_nodes: int = 256):
        if cov.kind != "hyperelliptic":
            raise TypeError("HyperellipticKernels needs a two-fold covering")
        self.cov = cov
        self.period_nodes = period_nodes
        self.g = cov.genus
        self.n = cov.n
        self.f_asc = cov.branch_poly_coeffs()          # ascending, degree n
        self.sigma = a3_signs(cov)
        lam = cov.lam
        # h0[k] = sigma_k sqrt(f_k(lam_k)); its square is f'(lam_k)
        self.h0 = np.array([
            self.sigma[k] * np.sqrt(np.prod(lam[k] - np.delete(lam, k)))
            for k in range(self.n)
        ])
        if self.g > 0:
            self._init_periods()
        else:
            self.c_corr = np.zeros((0, 0), complex)
            self.A = np.zeros((0, 0), complex)
            self.Phi = np.zeros((self.n, 0), complex)
            self.B = np.zeros((0, 0), complex)
        self.basis = HolomorphicBasis(
            a_periods_raw=self.A.copy(),
            normalizer=np.linalg.inv(self.A) if self.g else np.zeros((0, 0)),
            at_ram=self.Phi.copy(),
        )
        self.riemann = RiemannMatrix(self.B.copy())

    # -- period setup -----------------------------------------------------------

    def _hol_rows(self, zeta, y):
        """Rows lam^{k-1}/y for k = 1..g."""
        powers = np.vstack([zeta ** k for k in range(self.g)])
        return powers / y

    def _contour_integral(self, contour, rows_fn, nrows, nodes=None):
        total = np.zeros(nrows, complex)
        err = np.zeros(nrows)
        base = max(4, (nodes or self.period_nodes) // 64)
        for seg in contour.segments:
            def fvec(t, seg=seg):
                zeta, dz, y = seg.evaluate(t)
                return rows_fn(zeta, y) * dz

            val, e = integrate_vector(fvec, base_panels=base)
            total += val
            err += e
        return total, err

    def _init_periods(self):
        g, n = self.g, self.n
        self.a_contours = [a_cycle(self.cov, t) for t in range(g)]
        self.b_contours = [b_cycle(self.cov, t) for t in range(g)]
        A = np.zeros((g, g), complex)
        for mrow, cont in enumerate(self.a_contours):
            val, _ = self._contour_integral(cont, self._hol_rows, g)
            A[mrow, :] = val
        if not np.isfinite(A).all() or abs(np.linalg.det(A)) < 1e-14:
            raise PeriodSolveFailure("a-period matrix is singular")
        self.A = A

        # double a-periods of W0: the two circles must stay disjoint in the
        # base (concentric distinct radii on the diagonal)
        D = np.zeros((g, g), complex)
        for mrow in range(g):
            for jcol in range(g):
                fi, fo = 0.2, 0.45
                for _ in range(8):
                    inner = a_cycle(self.cov, mrow, radius_factor=fi)
                    outer = a_cycle(self.cov, jcol, radius_factor=fo)
                    if mrow == jcol:
                        break
                    gap = abs(inner.center - outer.center) - inner.radius - outer.radius
                    if gap > 0.05 * self.cov.min_spacing():
                        break
                    fi, fo = 0.8 * fi, 0.8 * fo
                else:
                    raise PeriodSolveFailure("cannot separate period circles")
                D[mrow, jcol] = self._double_period(inner, outer)
        Ainv = np.linalg.inv(A)
        self.c_corr = -Ainv @ D @ Ainv.T
        self.c_corr = 0.5 * (self.c_corr + self.c_corr.T)

        lam = self.cov.lam
        vand = np.vstack([lam ** k for k in range(g)]).T      # (n, g)
        what_at_ram = 2.0 * vand / self.h0[:, None]
        self.Phi = what_at_ram @ Ainv

        B = np.zeros((g, g), complex)
        for brow, cont in enumerate(self.b_contours):
            val, _ = self._contour_integral(cont, self._hol_rows, g)
            B[brow, :] = val
        self.B = B @ Ainv
        sym_err = np.abs(self.B - self.B.T).max()
        if sym_err > 1e-8 * max(1.0, np.abs(self.B).max()):
            raise PeriodSolveFailure(f"period matrix asymmetry {sym_err:.2e}")
        eigs = np.linalg.eigvalsh(self.B.imag)
        if eigs.min() <= 0:
            raise PeriodSolveFailure(
                "imaginary part of the period matrix is not positive definite")

    def _double_period(self, inner, outer) -> complex:
        def inner_integral(zq, yq):
            total = np.zeros(len(zq), complex)
            for seg in inner.segments:
                def fv(t, seg=seg):
                    zp, dzp, yp = seg.evaluate(t)
                    return self.w0_coef(zq[:, None], yq[:, None],
                                        zp[None, :], yp[None, :]) * dzp[None, :]

                val, _ = integrate_vector(fv, base_panels=4)
                total += val
            return total

        total = 0.0 + 0.0j
        for seg in outer.segments:
            def fv(t, seg=seg):
                zq, dzq, yq = seg.evaluate(t)
                return (inner_integral(zq, yq) * dzq)[None, :]

            val, _ = integrate_vector(fv, base_panels=4)
            total += val[0]
        return total

    # -- closed-form ingredients --------------------------------------------------

    def f_pair(self, u, v):
        """F(u, v) from the even/odd split of the branch polynomial."""
        f = self.f_asc
        g1 = self.g + 1
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        out = np.zeros(np.broadcast(u, v).shape, complex)
        uv = u * v
        for i in range(g1 + 1):
            f2i = f[2 * i] if 2 * i < len(f) else 0.0
            f2i1 = f[2 * i + 1] if 2 * i + 1 < len(f) else 0.0
            out = out + uv ** i * (2.0 * f2i + f2i1 * (u + v))
        return out

    def f_pair_d2u(self, u, v):
        """d^2 F / du^2."""
        f = self.f_asc
        g1 = self.g + 1
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        out = np.zeros(np.broadcast(u, v).shape, complex)
        for i in range(g1 + 1):
            f2i = f[2 * i] if 2 * i < len(f) else 0.0
            f2i1 = f[2 * i + 1] if 2 * i + 1 < len(f) else 0.0
            if i >= 2:
                out = out + i * (i - 1) * u ** (i - 2) * v ** i * (
                    2.0 * f2i + f2i1 * (u + v))
            if i >= 1:
                out = out + 2.0 * i * u ** (i - 1) * v ** i * f2i1
        return out

    def w0_coef(self, u, yu, v, yv):
        """Algebraic kernel against dlam dlam, both points ordinary."""
        return (self.f_pair(u, v) + 2.0 * yu * yv) / (4.0 * (u - v) ** 2 * yu * yv)

    def _corr_coef(self, u, yu, v, yv):
        if self.g == 0:
            return 0.0
        pu = np.vstack([np.asarray(u, complex) ** k for k in range(self.g)]) / yu
        pv = np.vstack([np.asarray(v, complex) ** k for k in range(self.g)]) / yv
        return np.einsum("k...,kl,l...->...", pu, self.c_corr, pv)

    # -- public evaluations --------------------------------------------------------

    def w_point_point(self, p, q):
        """W against dlam frames at two ordinary surface points.

        Points are (lam, y) pairs or SurfacePoint instances.
        """
        lu, yu = _as_pair(p)
        lv, yv = _as_pair(q)
        if abs(lu - lv) < 1e-13 * self.cov.scale() and abs(yu - yv) < 1e-10:
            raise DiagonalSingularity("kernel evaluated on the diagonal")
        return complex(self.w0_coef(lu, yu, lv, yv) + self._corr_coef(lu, yu, lv, yv))

    def w_rows_at_ram(self, zeta, y):
        """Rows W(Q, P_i) for all i, dlam frame in Q, chart frame at P_i."""
        lam = self.cov.lam
        zq = np.asarray(zeta, complex)
        base = self.f_pair(zq[None, :], lam[:, None]) / (
            2.0 * (zq[None, :] - lam[:, None]) ** 2 * y[None, :] * self.h0[:, None])
        if self.g:
            pv = np.vstack([zq ** k for k in range(self.g)]) / y   # (g, nq)
            vand = np.vstack([lam ** k for k in range(self.g)]).T  # (n, g)
            wr = 2.0 * vand / self.h0[:, None]                     # chart values
            base = base + np.einsum("ik,kl,lq->iq", wr, self.c_corr, pv)
        return base

    def w_point_ram(self, q, i: int):
        lv, yv = _as_pair(q)
        rows = self.w_rows_at_ram(np.array([lv]), np.array([yv]))
        return complex(rows[i, 0])

    def w_ram_ram(self, i: int, j: int):
        """W at two ramification points, both in chart frames."""
        if i == j:
            raise DiagonalSingularity("coinciding ramification points")
        lam = self.cov.lam
        val = self.f_pair(lam[i], lam[j]) / (
            (lam[i] - lam[j]) ** 2 * self.h0[i] * self.h0[j])
        if self.g:
            vand_i = lam[i] ** np.arange(self.g)
            vand_j = lam[j] ** np.arange(self.g)
            val = val + 4.0 * vand_i @ self.c_corr @ vand_j / (self.h0[i] * self.h0[j])
        return complex(val)

    def beta_matrix(self) -> np.ndarray:
        n = self.n
        beta = np.zeros((n, n), complex)
        for i in range(n):
            for j in range(i + 1, n):
                beta[i, j] = beta[j, i] = 0.5 * self.w_ram_ram(i, j)
        return beta

    def sw_at_ram(self, k: int) -> complex:
        """Constant coefficient of W on the diagonal at P_k, chart frame.

        Closed form for the algebraic part plus the finite-rank correction;
        cross-checked against a two-scale numerical extraction.
        """
        lam = self.cov.lam
        fk = self.h0[k] ** 2                  # f_k(lam_k) = f'(lam_k)
        others = lam[np.arange(self.n) != k]
        dfk = np.sum([np.prod(lam[k] - others[np.arange(self.n - 1) != t])
                      for t in range(self.n - 1)])
        val = (0.5 * self.f_pair_d2u(lam[k], lam[k]) - 0.5 * dfk) / fk
        if self.g:
            vand = lam[k] ** np.arange(self.g)
            val = val + 4.0 * vand @ self.c_corr @ vand / fk
        val = complex(val)
        probe = self._sw_probe(k)
        if abs(probe - val) > 1e-5 * max(1.0, abs(val)):
            raise ExpansionFailure(
                f"diagonal expansion mismatch at P_{k + 1}: {val} vs probe {probe}")
        return val

    def _sw_probe(self, k: int, t: float | None = None) -> complex:
        """W in the chart at P_k minus the pole, sampled at a small scale."""
        if t is None:
            t = 5e-4 * math.sqrt(self.cov.min_spacing())
        vals = []
        for tt in (t, 0.5 * t):
            x1 = tt
            x2 = 1j * tt
            p1 = self._chart_point(k, x1)
            p2 = self._chart_point(k, x2)
            w = self.w_point_point(p1, p2)
            w_chart = w * (2.0 * x1) * (2.0 * x2)
            vals.append(w_chart - 1.0 / (x1 - x2) ** 2)
        # first-order Richardson in the sampling scale
        return complex(2.0 * vals[1] - vals[0])

    def _chart_point(self, k: int, x: complex):
        lam_k = self.cov.branch_points[k]
        zeta = lam_k + x * x
        lam = self.cov.lam
        fk = np.prod(zeta - lam[np.arange(self.n) != k])
        h = np.sqrt(fk)
        h0 = self.h0[k]
        if abs(h - h0) > abs(h + h0):
            h = -h
        return (zeta, x * h)

    # -- a-period of the full kernel (first argument), for verification -----------

    def a_period_first_arg(self, m: int, q, nodes: int | None = None) -> complex:
        cont = self.a_contours[m]
        lv, yv = _as_pair(q)

        def rows(zeta, y):
            w = self.w0_coef(zeta, y, lv, yv) + self._corr_coef(zeta, y, lv, yv)
            return np.atleast_2d(w)

        val, _ = self._contour_integral(cont, rows, 1, nodes=nodes)
        return complex(val[0])

    # -- derived kernels -----------------------------------------------------------

    def q_inverse(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=complex)
        bq = self.B + q
        det = np.linalg.det(bq) if self.g else 1.0
        if self.g and abs(det) < 1e-10 * max(1.0, np.abs(bq).max() ** self.g):
            raise OnDeformationDivisor(f"det(B + q) = {det:.3e}")
        return np.linalg.inv(bq) if self.g else np.zeros((0, 0))

    def wq_ram_ram_matrix(self, q) -> np.ndarray:
        """Off-diagonal matrix of deformed-kernel values at ramification pairs."""
        n = self.n
        w = np.zeros((n, n), complex)
        for i in range(n):
            for j in range(n):
                if i != j:
                    w[i, j] = self.w_ram_ram(i, j)
        if self.g:
            qinv = self.q_inverse(q)
            w = w - 2j * np.pi * self.Phi @ qinv @ self.Phi.T
            np.fill_diagonal(w, 0.0)
        return w

    def schiffer_ram_ram_matrix(self, other: "HyperellipticKernels | None" = None):
        n = self.n
        w = np.zeros((n, n), complex)
        for i in range(n):
            for j in range(n):
                if i != j:
                    w[i, j] = self.w_ram_ram(i, j)
        if self.g:
            M = _im_b_inverse(self, other)
            w = w - np.pi * self.Phi @ M @ self.Phi.T
            np.fill_diagonal(w, 0.0)
        return w

    def bergman_ram_ram_matrix(self, other: "HyperellipticKernels | None" = None):
        """Matrix B(P_i, conj P_j): chart frame in the first slot, conjugated
        chart frame in the second."""
        if self.g == 0:
            return np.zeros((self.n, self.n), complex)
        other = other or self
        M = _im_b_inverse(self, other)
        return np.pi * self.Phi @ M @ np.conj(other.Phi).T

    def schiffer_point_point(self, p, q, other=None):
        val = self.w_point_point(p, q)
        if self.g:
            M = _im_b_inverse(self, other)
            val = val - np.pi * self.omega_at(p) @ M @ self.omega_at(q)
        return complex(val)

    def bergman_point_point(self, p, q, other=None):
        """B(P, conj Q) against dlam x conj(dlam) frames."""
        if self.g == 0:
            return 0.0j
        other = other or self
        M = _im_b_inverse(self, other)
        return complex(np.pi * self.omega_at(p) @ M @ np.conj(other.omega_at(q)))

    def omega_at(self, p) -> np.ndarray:
        """Normalized holomorphic differentials against dlam at a point."""
        lu, yu = _as_pair(p)
        if self.g == 0:
            return np.zeros(0, complex)
        pu = np.array([lu ** k for k in range(self.g)], dtype=complex) / yu
        return np.linalg.inv(self.A).T @ pu

    def omega_at_ram(self) -> np.ndarray:
        return self.Phi.copy()


def _as_pair(p):
    if isinstance(p, tuple):
        return complex(p[0]), complex(p[1])
    return complex(p.lam), complex(p.y)


def _im_b_inverse(kern: HyperellipticKernels, other=None) -> np.ndarray:
    """Inverse of (B - conj(B'))/2i; with other = self this is (Im B)^{-1}."""
    other = other or kern
    im = (kern.B - np.conj(other.B)) / 2j
    return np.linalg.inv(im)


# ----------------------------------------------------------------------------
# rational (genus zero) kernels
# ----------------------------------------------------------------------------

class RationalKernels:
    """Kernel dx dy / (x - y)^2 on the x-sphere for a rational covering.

    Chart factors at the critical points are eta_k = 1/sqrt(lam''(a_k)/2)
    on the principal branch; the two-fold model fixes the same values up to
    the stored sign convention.
    """

    def __init__(self, cov: Covering):
        if cov.kind != "rational":
            raise TypeError("RationalKernels needs a rational covering")
        self.cov = cov
        self.g = 0
        self.n = cov.n
        p = np.asarray(cov.numerator, complex)
        q = np.asarray(cov.denominator, complex)
        pp = np.polynomial.polynomial
        d1_num = pp.polysub(pp.polymul(pp.polyder(p), q), pp.polymul(p, pp.polyder(q)))
        d2_num = pp.polysub(pp.polymul(pp.polyder(d1_num), q),
                            2.0 * pp.polymul(d1_num, pp.polyder(q)))

        def lam2(x):
            return pp.polyval(x, d2_num) / pp.polyval(x, q) ** 3

        self.ram_x = np.asarray(cov.ram_x, complex)
        self.eta = np.array([1.0 / np.sqrt(lam2(a) / 2.0) for a in self.ram_x])

    def w_point_point(self, x, y):
        x, y = complex(x), complex(y)
        if abs(x - y) < 1e-13 * max(1.0, abs(x)):
            raise DiagonalSingularity("kernel evaluated on the diagonal")
        return 1.0 / (x - y) ** 2

    def w_point_ram(self, x, i: int):
        return self.eta[i] / (complex(x) - self.ram_x[i]) ** 2

    def w_ram_ram(self, i: int, j: int):
        if i == j:
            raise DiagonalSingularity("coinciding ramification points")
        return complex(self.eta[i] * self.eta[j]
                       / (self.ram_x[i] - self.ram_x[j]) ** 2)

    def beta_matrix(self) -> np.ndarray:
        n = self.n
        beta = np.zeros((n, n), complex)
        for i in range(n):
            for j in range(i + 1, n):
                beta[i, j] = beta[j, i] = 0.5 * self.w_ram_ram(i, j)
        return beta


# ----------------------------------------------------------------------------
# rotation data and spectrum
# ----------------------------------------------------------------------------

def rotation_data(kernels, kind: str = "W", q=None) -> RotationData:
    """Assemble Gamma, V = [Gamma, U] and U from kernel values at the
    ramification points.  ``kind`` selects the kernel family."""
    cov = kernels.cov
    lam = cov.lam
    if kind == "W":
        beta = kernels.beta_matrix()
    elif kind == "Wq":
        beta = 0.5 * kernels.wq_ram_ram_matrix(q)
    elif kind == "Schiffer":
        beta = 0.5 * kernels.schiffer_ram_ram_matrix()
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    np.fill_diagonal(beta, 0.0)
    u = np.diag(lam)
    v = beta * (lam[None, :] - lam[:, None])
    return RotationData(gamma=beta, v=v, u=u)


def rotation_data_doubles(kernels: HyperellipticKernels) -> RotationData:
    """2n-dimensional rotation data of the real-double structure."""
    n = kernels.n
    lam = kernels.cov.lam
    om = 0.5 * kernels.schiffer_ram_ram_matrix()
    bg = 0.5 * kernels.bergman_ram_ram_matrix()
    gamma = np.zeros((2 * n, 2 * n), complex)
    gamma[:n, :n] = om
    gamma[:n, n:] = bg
    gamma[n:, :n] = bg.T
    gamma[n:, n:] = np.conj(om)
    np.fill_diagonal(gamma, 0.0)
    u_diag = np.concatenate([lam, np.conj(lam)])
    u = np.diag(u_diag)
    v = gamma * (u_diag[None, :] - u_diag[:, None])
    return RotationData(gamma=gamma, v=v, u=u, doubles=True)


def spectrum(rot: RotationData, cov: Covering, tol: float = 1e-10):
    """Eigenvalues of V matched against the predicted exact multiset."""
    eig = np.sort_complex(np.linalg.eigvals(rot.v))
    pred = np.sort_complex(np.array(
        [complex(float(m)) for m in predicted_spectrum(cov, doubles=rot.doubles)]))
    if len(eig) != len(pred):
        raise SpectrumMismatch(f"{len(eig)} eigenvalues, {len(pred)} predicted")
    residual = float(np.abs(eig - pred).max())
    if residual > tol:
        raise SpectrumMismatch(
            f"eigenvalue match residual {residual:.3e} exceeds {tol:.1e}")
    return eig, pred, residual
