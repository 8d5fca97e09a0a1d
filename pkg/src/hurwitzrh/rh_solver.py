"""Contour-integral fundamental solutions and their verification.

The entry (i, j) of the half-plane solution is

    Psi_ij(z) = 1/(2 i sqrt(pi) sqrt(z)) * int_{C_j} exp(z lam(Q)) W(Q, P_i),

with the steepest-descent contours of the chosen side.  Internally the
integrals are computed in reduced form (weight ``exp(z (lam - lam_j))``) so
that the column scales ``exp(z lam_j)`` never overflow and the asymptotic
normalization can be read off directly.

Verification helpers compare finite differences of the solution against the
linear systems in z and in the branch points, check the determinant and the
large-z normalization, and test the integer Stokes matrix on both rays of
the separating line.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .contours import build_c_side, ray_angle
from .covering import Covering, build_hyperelliptic, stokes_gap
from .errors import StokesRayCrossed, TailBoundViolated
from .kernels import HyperellipticKernels, rotation_data
from .quadrature import integrate_vector


@dataclass
class SolutionFrame:
    """Value of the fundamental solution at one point.

    ``reduced`` holds Psi * exp(-z U); ``matrix`` restores the exponential
    column scales.  ``err`` is the absolute quadrature estimate for the
    reduced entries.
    """

    z: complex
    side: str
    reduced: np.ndarray
    err: np.ndarray
    eps: float = 0.0
    sqrt_flipped: bool = False
    column_scale: np.ndarray = field(default=None)

    @property
    def matrix(self) -> np.ndarray:
        return self.reduced * self.column_scale[None, :]

    def det_reduced(self) -> complex:
        return complex(np.linalg.det(self.reduced))


# ----------------------------------------------------------------------------
# raw integrals
# ----------------------------------------------------------------------------

def auto_eps(cov: Covering, z: complex, side: str) -> float:
    """Contour rotation placing z well inside the (continued) decay sector."""
    rel = cov.line.rel_arg(z)
    target = rel + 0.5 * math.pi if side == "r" else rel - 0.5 * math.pi
    while target <= -math.pi:
        target += 2.0 * math.pi
    while target > math.pi:
        target -= 2.0 * math.pi
    gap = stokes_gap(cov, cov.phi)
    eps = max(-0.85 * gap, min(0.85 * gap, target))
    theta = ray_angle(cov.phi, side, eps)
    if -(z * cmath.exp(1j * theta)).real <= 0.0:
        raise StokesRayCrossed(
            f"no admissible contour rotation reaches z with arg {cmath.phase(z):.3f}")
    return eps


def contour_raw_integrals(kern: HyperellipticKernels, z: complex, side: str,
                          *, eps: float | str = "auto",
                          with_lambda_rows: bool = False,
                          node_factor: int = 1):
    """Reduced integrals over the full contour system of one side.

    Returns (IW, J, IL, err, eps) where IW[i, j] is the kernel integral with
    weight exp(z (lam - lam_j)), J[k, j] the same for the raw holomorphic
    rows lam^{k-1}/y, and IL the lambda-weighted kernel rows (or None).
    """
    cov = kern.cov
    n, g = kern.n, kern.g
    if eps == "auto":
        eps = auto_eps(cov, z, side)
    theta = ray_angle(cov.phi, side, eps)
    decay = -(z * cmath.exp(1j * theta)).real
    if decay <= 0.0:
        raise TailBoundViolated("exp(z lam) does not decay along the contour")
    rho = min(0.1 * cov.min_spacing(), 2.0 / abs(z))
    nrows = n + g + (n if with_lambda_rows else 0)
    IW = np.zeros((n, n), complex)
    J = np.zeros((g, n), complex)
    IL = np.zeros((n, n), complex) if with_lambda_rows else None
    err = np.zeros((n, n))
    for j in range(n):
        cont = build_c_side(cov, j, side, eps=eps, decay=decay, rho=rho)
        lam_j = cov.branch_points[j]
        tot = np.zeros(nrows, complex)
        tot_err = np.zeros(nrows)
        for seg in cont.segments:
            def fvec(t, seg=seg):
                zeta, dz, y = seg.evaluate(t)
                zeta = np.atleast_1d(zeta)
                y = np.atleast_1d(y)
                w = kern.w_rows_at_ram(zeta, y)
                rows = [w]
                if g:
                    rows.append(kern._hol_rows(zeta, y))
                if with_lambda_rows:
                    rows.append(zeta[None, :] * w)
                weight = np.exp(z * (zeta - lam_j)) * dz
                return np.vstack(rows) * weight[None, :]

            val, e = integrate_vector(fvec, base_panels=6 * node_factor)
            tot += val
            tot_err += e
        IW[:, j] = tot[:n]
        if g:
            J[:, j] = tot[n:n + g]
        if with_lambda_rows:
            IL[:, j] = tot[n + g:]
        err[:, j] = tot_err[:n]
    return IW, J, IL, err, eps


def prefactor(cov: Covering, z: complex, flipped: bool = False) -> complex:
    return 1.0 / (2j * math.sqrt(math.pi) * cov.line.sqrt(z, flipped))


def assemble_kernel_rows(kern: HyperellipticKernels, IW, J, kind: str = "W",
                         q=None):
    """Combine kernel and holomorphic-row integrals for a derived kernel."""
    if kind == "W" or kern.g == 0:
        return IW
    Jn = np.linalg.inv(kern.A).T @ J          # normalized omega integrals
    if kind == "Wq":
        qinv = kern.q_inverse(q)
        return IW - 2j * np.pi * kern.Phi @ qinv @ Jn
    if kind == "Schiffer":
        M = np.linalg.inv(kern.B.imag)
        return IW - np.pi * kern.Phi @ M @ Jn
    raise ValueError(f"unknown kernel kind {kind!r}")


def psi_matrix(kern: HyperellipticKernels, z: complex, side: str,
               *, kind: str = "W", q=None, eps: float | str = "auto",
               sqrt_flip: bool = False, node_factor: int = 1) -> SolutionFrame:
    """Fundamental solution of the chosen side at z, for the W family."""
    if z == 0:
        raise ValueError("z must be nonzero")
    cov = kern.cov
    IW, J, _, err, used_eps = contour_raw_integrals(
        kern, z, side, eps=eps, node_factor=node_factor)
    rows = assemble_kernel_rows(kern, IW, J, kind=kind, q=q)
    pref = prefactor(cov, z, sqrt_flip)
    reduced = pref * rows
    scale = np.exp(z * cov.lam)
    return SolutionFrame(z=z, side=side, reduced=reduced,
                         err=np.abs(pref) * err, eps=used_eps,
                         sqrt_flipped=sqrt_flip, column_scale=scale)


# ----------------------------------------------------------------------------
# verification
# ----------------------------------------------------------------------------

def verify_det(frame: SolutionFrame) -> float:
    """Relative deviation of det(Psi) from exp(z sum lam_k)."""
    return abs(frame.det_reduced() - 1.0)


def verify_ode_z(kern: HyperellipticKernels, z: complex, side: str,
                 h: float = 1e-4, kind: str = "W", q=None) -> float:
    """Residual of dPsi/dz = (U + V/z) Psi by central differences."""
    rot = rotation_data(kern, kind=kind, q=q)
    frames = {s: psi_matrix(kern, z + s * h, side, kind=kind, q=q)
              for s in (-1, 0, 1)}
    fd = (frames[1].matrix - frames[-1].matrix) / (2.0 * h)
    rhs = (rot.u + rot.v / z) @ frames[0].matrix
    return float(np.linalg.norm(fd - rhs) / np.linalg.norm(rhs))


def _perturbed_covering(cov: Covering, i: int, delta: complex) -> Covering:
    pts = list(cov.branch_points)
    pts[i] = pts[i] + delta
    return build_hyperelliptic(pts, cov.phi)


def verify_ode_lambda(kern: HyperellipticKernels, z: complex, side: str, i: int,
                      h: float = 1e-5, kind: str = "W", q=None) -> float:
    """Residual of dPsi/dlam_i = (z E_i - [E_i, Gamma]) Psi."""
    cov = kern.cov
    rot = rotation_data(kern, kind=kind, q=q)
    n = kern.n
    e_i = np.zeros((n, n), complex)
    e_i[i, i] = 1.0
    bracket = e_i @ rot.gamma - rot.gamma @ e_i
    frame0 = psi_matrix(kern, z, side, kind=kind, q=q)
    plus = psi_matrix(HyperellipticKernels(_perturbed_covering(cov, i, h),
                                           kern.period_nodes), z, side,
                      kind=kind, q=q)
    minus = psi_matrix(HyperellipticKernels(_perturbed_covering(cov, i, -h),
                                            kern.period_nodes), z, side,
                       kind=kind, q=q)
    fd = (plus.matrix - minus.matrix) / (2.0 * h)
    rhs = (z * e_i - bracket) @ frame0.matrix
    return float(np.linalg.norm(fd - rhs) / max(np.linalg.norm(rhs), 1e-300))


def _scaled_covering(cov: Covering, factor: complex) -> Covering:
    return build_hyperelliptic([p * factor for p in cov.branch_points], cov.phi)


def _shifted_covering(cov: Covering, delta: complex) -> Covering:
    return build_hyperelliptic([p + delta for p in cov.branch_points], cov.phi)


def verify_shift_identity(kern: HyperellipticKernels, z: complex, side: str,
                          h: float = 1e-5) -> float:
    """sum_k d/dlam_k of the raw kernel integrals equals z times them."""
    eps = auto_eps(kern.cov, z, side)
    raw = lambda cov: _raw_full(cov, kern.period_nodes, z, side, eps)
    I0, _ = raw(kern.cov)
    Ip, _ = raw(_shifted_covering(kern.cov, h))
    Im, _ = raw(_shifted_covering(kern.cov, -h))
    fd = (Ip - Im) / (2.0 * h)
    rhs = z * I0
    return float(np.linalg.norm(fd - rhs) / np.linalg.norm(rhs))


def verify_euler(kern: HyperellipticKernels, z: complex, side: str,
                 h: float = 1e-5) -> float:
    """Scaling action on the raw integrals:

    sum_k lam_k d/dlam_k I = z * (lambda-weighted I) - I/2.
    """
    eps = auto_eps(kern.cov, z, side)
    I0, IL = _raw_full(kern.cov, kern.period_nodes, z, side, eps,
                       with_lambda_rows=True)
    Ip, _ = _raw_full(_scaled_covering(kern.cov, 1.0 + h), kern.period_nodes,
                      z, side, eps)
    Im, _ = _raw_full(_scaled_covering(kern.cov, 1.0 - h), kern.period_nodes,
                      z, side, eps)
    fd = (Ip - Im) / (2.0 * h)
    rhs = z * IL - 0.5 * I0
    return float(np.linalg.norm(fd - rhs) / np.linalg.norm(rhs))


def verify_hol_shift_identity(kern: HyperellipticKernels, z: complex, side: str,
                              h: float = 1e-5) -> float:
    """Same shift identity for the normalized holomorphic rows."""
    eps = auto_eps(kern.cov, z, side)

    def jn(cov):
        k = HyperellipticKernels(cov, kern.period_nodes)
        _, J, _, _, _ = contour_raw_integrals(k, z, side, eps=eps)
        scale = np.exp(z * cov.lam)
        return (np.linalg.inv(k.A).T @ J) * scale[None, :]

    J0 = jn(kern.cov)
    Jp = jn(_shifted_covering(kern.cov, h))
    Jm = jn(_shifted_covering(kern.cov, -h))
    fd = (Jp - Jm) / (2.0 * h)
    rhs = z * J0
    return float(np.linalg.norm(fd - rhs) / np.linalg.norm(rhs))


def _raw_full(cov: Covering, period_nodes: int, z: complex, side: str,
              eps: float, with_lambda_rows: bool = False):
    kern = HyperellipticKernels(cov, period_nodes)
    IW, _, IL, _, _ = contour_raw_integrals(
        kern, z, side, eps=eps, with_lambda_rows=with_lambda_rows)
    scale = np.exp(z * cov.lam)
    IW = IW * scale[None, :]
    if IL is not None:
        IL = IL * scale[None, :]
    return IW, IL


def verify_stokes_numeric(kern: HyperellipticKernels, z_plus: complex,
                          S: np.ndarray, *, ray: str = "plus",
                          kind: str = "W", q=None) -> float:
    """Residual of the jump relation on the separating line.

    On l_plus the two solutions are related by S, on l_minus by S^T (with
    the square root continued across its cut for the right solution).
    """
    cov = kern.cov
    Sf = np.asarray(S, dtype=float)
    if ray == "plus":
        z = abs(z_plus) * cmath.exp(1j * cov.phi)
        psi_r = psi_matrix(kern, z, "r", kind=kind, q=q)
        psi_l = psi_matrix(kern, z, "l", kind=kind, q=q)
        rhs = psi_r.matrix @ Sf
        return float(np.linalg.norm(psi_l.matrix - rhs)
                     / np.linalg.norm(psi_r.matrix))
    if ray == "minus":
        z = abs(z_plus) * cmath.exp(1j * (cov.phi + math.pi))
        psi_r = psi_matrix(kern, z, "r", kind=kind, q=q, sqrt_flip=True)
        psi_l = psi_matrix(kern, z, "l", kind=kind, q=q)
        rhs = psi_r.matrix @ Sf.T
        return float(np.linalg.norm(psi_l.matrix - rhs)
                     / np.linalg.norm(psi_r.matrix))
    raise ValueError("ray must be 'plus' or 'minus'")


def asymptotic_report(kern: HyperellipticKernels, radii, side: str = "l",
                      arg_offset: float = 0.5 * math.pi):
    """Decay of ||Psi e^{-zU} - 1|| * |z| along a fixed admissible ray and a
    least-squares fit of the 1/z coefficient."""
    cov = kern.cov
    direction = cmath.exp(1j * (cov.phi + arg_offset))
    samples = []
    for r in radii:
        z = r * direction
        frame = psi_matrix(kern, z, side)
        dev = frame.reduced - np.eye(kern.n)
        samples.append((z, dev))
    decay = [abs(z) * float(np.linalg.norm(dev)) for z, dev in samples]
    # fit dev ~ G1/z + G2/z^2 + G3/z^3 per entry
    zs = np.array([z for z, _ in samples])
    basis = np.vstack([zs ** -1, zs ** -2, zs ** -3]).T
    devs = np.stack([dev for _, dev in samples])       # (nz, n, n)
    coef, *_ = np.linalg.lstsq(basis, devs.reshape(len(zs), -1), rcond=None)
    g1 = coef[0].reshape(kern.n, kern.n)
    return {"z": zs, "scaled_norms": decay, "gamma_fit": g1}


def gamma_fit_residual(kern: HyperellipticKernels, radii,
                       side: str = "l") -> float:
    """Largest off-diagonal deviation of the fitted 1/z coefficient from the
    rotation-coefficient matrix."""
    rep = asymptotic_report(kern, radii, side=side)
    rot = rotation_data(kern)
    g1 = rep["gamma_fit"]
    mask = ~np.eye(kern.n, dtype=bool)
    return float(np.abs(g1 - rot.gamma)[mask].max())
