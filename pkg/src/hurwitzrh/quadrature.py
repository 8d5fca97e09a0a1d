"""Panel-based Gauss-Legendre quadrature for paths in the complex plane.

Integrands are vector valued (several kernel rows share one contour), so the
adaptive loop refines the panel subdivision for all rows at once and reports
a per-row error estimate obtained from the last refinement step.
"""

from __future__ import annotations

import functools

import numpy as np

from .errors import QuadratureFailure

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-9


@functools.lru_cache(maxsize=None)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(t0: float, t1: float, panels: int, order: int = 16):
    """Nodes and weights for `panels` equal GL panels on [t0, t1]."""
    x, w = _gl_nodes(order)
    edges = np.linspace(t0, t1, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    t = (mid + half * x[None, :]).ravel()
    wt = (half * w[None, :]).ravel()
    return t, wt


def integrate_vector(fvec, t0: float = 0.0, t1: float = 1.0, *,
                     base_panels: int = 4, order: int = 16,
                     abs_tol: float = DEFAULT_ABS_TOL,
                     rel_tol: float = DEFAULT_REL_TOL,
                     max_doublings: int = 9):
    """Integrate a vector-valued function of one real parameter.

    ``fvec(t_array) -> array of shape (rows, len(t_array))``.  Returns
    ``(values, err)`` where err is the difference between the two finest
    subdivisions, per row.
    """
    panels = base_panels
    t, wt = panel_nodes(t0, t1, panels, order)
    prev = fvec(t) @ wt
    for _ in range(max_doublings):
        panels *= 2
        t, wt = panel_nodes(t0, t1, panels, order)
        cur = fvec(t) @ wt
        err = np.abs(cur - prev)
        scale = np.maximum(np.abs(cur), 1.0e-300)
        if np.all((err <= abs_tol) | (err / scale <= rel_tol)):
            return cur, err
        prev = cur
    raise QuadratureFailure(
        f"no convergence after {panels} panels; last error {float(err.max()):.3e}")
