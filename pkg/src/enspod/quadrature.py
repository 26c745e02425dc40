"""Quadrature rules on the reference triangle {(x, y): x, y >= 0, x + y <= 1}.

Weights sum to 1/2 (the reference area), so an integral over a physical
triangle is ``det(J) * sum(w_q * f(q))``.
"""

import numpy as np


def degree5_rule():
    """Symmetric 7-point rule, exact for polynomials of degree <= 5."""
    s = np.sqrt(15.0)
    a = (6.0 - s) / 21.0   # barycentric coordinate, small group
    b = (6.0 + s) / 21.0
    wa = (155.0 - s) / 1200.0
    wb = (155.0 + s) / 1200.0
    bary = np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [1 - 2 * a, a, a], [a, 1 - 2 * a, a], [a, a, 1 - 2 * a],
        [1 - 2 * b, b, b], [b, 1 - 2 * b, b], [b, b, 1 - 2 * b],
    ])
    w = np.array([9.0 / 40.0, wa, wa, wa, wb, wb, wb])
    pts = bary[:, 1:3]  # (xi, eta) with lambda1 = 1 - xi - eta
    return pts, 0.5 * w


def collapsed_gauss_rule(m=10):
    """Tensor Gauss-Legendre rule collapsed onto the triangle (Duffy map).

    High-order oracle rule used for non-polynomial integrands (Lp norms,
    analytic load vectors) and as an independent check on degree5_rule.
    """
    x, wx = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1.0)
    wx = 0.5 * wx
    XI, ETA = np.meshgrid(x, x, indexing="ij")
    WXI, WETA = np.meshgrid(wx, wx, indexing="ij")
    pts = np.column_stack([XI.ravel(), (ETA * (1.0 - XI)).ravel()])
    w = (WXI * WETA * (1.0 - XI)).ravel()
    return pts, w
