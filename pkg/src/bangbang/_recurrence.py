"""Linear first-order recurrences ``y[k+1] = a*y[k] + r[k]`` in marching order.

Both sweeps reduce to this form: the state runs forward in time and the
adjoint runs in reversed time. Augmented interface unknowns enter as extra
injections ``c_i * q_i`` into ``r[m_i]`` and are closed by extrapolating
``y`` from two nodes on each side of the interface.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.signal import lfilter

from .errors import NumericalError


def march(a: float, r: np.ndarray, y0: float) -> np.ndarray:
    y = np.empty(r.size + 1)
    y[0] = y0
    if r.size:
        y[1:] = lfilter([1.0], [1.0, -a], r, zi=[a * y0])[0]
    return y


def closure_weights(theta) -> np.ndarray:
    """Weights on ``y[m-1], y[m], y[m+1], y[m+2]`` giving ``after - before``.

    ``theta`` is the distance from node ``m`` to the interface in units of the
    step. Each side is a two-node linear extrapolation to the interface.
    """
    theta = np.asarray(theta, dtype=float)
    return np.stack([theta, -(1.0 + theta), 2.0 - theta, theta - 1.0], axis=-1)


def solve_augmented(a: float, r: np.ndarray, y0: float, marks, coeffs, thetas):
    """March with unknown injections closed by one-sided extrapolation.

    Returns ``(y, q)``. The unknowns couple only to earlier ones in marching
    order, so the Schur complement on ``q`` is lower triangular once the
    interfaces are sorted by mark.
    """
    marks = np.asarray(marks, dtype=int)
    coeffs = np.asarray(coeffs, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    n = marks.size
    if n == 0:
        return march(a, r, y0), np.zeros(0)
    order = np.argsort(marks)
    m, c, th = marks[order], coeffs[order], thetas[order]
    if m[0] < 1 or m[-1] + 2 > r.size:
        raise NumericalError("augmented closure needs two nodes on each side of every interface")

    base = march(a, r, y0)
    stencil = m[:, None] + np.arange(-1, 3)[None, :]          # (n, 4)
    w = closure_weights(th)                                  # (n, 4)
    rhs = np.einsum("ij,ij->i", w, base[stencil])

    # response of y at stencil node of interface i to a unit q_j: c_j a^(k - m_j - 1)
    expo = stencil[:, None, :] - m[None, :, None] - 1         # (n, n, 4)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        resp = np.where(expo >= 0, c[None, :, None] * np.power(a, np.maximum(expo, 0)), 0.0)
    L = np.einsum("ik,ijk->ij", w, resp)
    M = np.eye(n) - L
    diag = np.abs(np.diag(M))
    if not np.all(np.isfinite(M)) or diag.min() <= 1e-14 * max(1.0, np.abs(M).max()):
        raise NumericalError(
            f"augmented interface system is singular (min |pivot| = {diag.min():.3e}, "
            f"a = {a:.6g})"
        )
    q_sorted = solve_triangular(M, rhs, lower=True)

    r = r.copy()
    r[m] += c * q_sorted
    q = np.empty(n)
    q[order] = q_sorted
    return march(a, r, y0), q
