"""Quadrature rules on the reference triangle and on edges.

Triangle rules are returned as barycentric points with weights that sum to
one, so integrals are computed as |T| * sum(w * f(x)). Low degrees use
classical symmetric rules; higher degrees fall back to Grundmann-Moeller
simplex rules, which are exact for any requested polynomial degree.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np


def _orbit(a: float, b: float, c: float) -> list[tuple[float, float, float]]:
    pts = {(a, b, c), (b, c, a), (c, a, b), (a, c, b), (c, b, a), (b, a, c)}
    return sorted(pts)


def _grundmann_moeller(s: int):
    d = 2 * s + 1
    m = 2
    points: list[tuple[float, float, float]] = []
    weights: list[float] = []
    for i in range(s + 1):
        denom = d + m - 2 * i
        coef = (Fraction((-1) ** i) * Fraction(denom) ** d
                / (Fraction(4) ** s * factorial(i) * factorial(d + m - i)))
        for k0 in range(s - i + 1):
            for k1 in range(s - i - k0 + 1):
                k2 = s - i - k0 - k1
                bary = ((2 * k0 + 1) / denom, (2 * k1 + 1) / denom, (2 * k2 + 1) / denom)
                points.append(bary)
                weights.append(float(2 * coef))  # normalize: unit simplex has area 1/2
    return np.array(points), np.array(weights)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule exact for polynomials up to the given total degree."""
    if degree <= 1:
        return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    if degree == 2:
        pts = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        return pts, np.full(3, 1 / 3)
    if degree in (3, 4):
        a1, w1 = 0.445948490915965, 0.223381589678011
        a2, w2 = 0.091576213509771, 0.109951743655322
        pts = np.array(_orbit(1 - 2 * a1, a1, a1) + _orbit(1 - 2 * a2, a2, a2))
        wts = np.array([w1] * 3 + [w2] * 3)
        return pts, wts
    if degree == 5:
        s15 = np.sqrt(15.0)
        a1 = (6.0 - s15) / 21.0
        a2 = (6.0 + s15) / 21.0
        w1 = (155.0 - s15) / 1200.0
        w2 = (155.0 + s15) / 1200.0
        pts = np.array([[1 / 3, 1 / 3, 1 / 3]]
                       + _orbit(1 - 2 * a1, a1, a1) + _orbit(1 - 2 * a2, a2, a2))
        wts = np.array([9 / 40] + [w1] * 3 + [w2] * 3)
        return pts, wts
    s = (degree - 1 + 1) // 2  # smallest s with 2s+1 >= degree
    return _grundmann_moeller(s)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1], exact for the given degree; weights sum to one."""
    n = max(1, (degree + 2) // 2)  # 2n - 1 >= degree
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0
