"""Fully normalized associated Legendre functions by stable three-term recurrence.

``Pbar[m][l - m, i]`` holds the colatitude part of the orthonormal complex
spherical harmonic: Y_l^m(theta, phi) = Pbar_l^m(cos theta) * exp(i m phi),
with the Condon-Shortley phase folded in (the sectorial seed carries the
minus sign), so that integral |Y_l^m|^2 over the unit sphere equals 1.

The degree recurrence on normalized values is well conditioned up to degree
several hundred, far beyond what this package requests.
"""
from __future__ import annotations

import math

import numpy as np


def normalized_legendre_table(lmax: int, x: np.ndarray) -> list[np.ndarray]:
    """Return per-order tables: out[m] has shape (lmax + 1 - m, len(x))."""
    x = np.asarray(x, dtype=np.float64)
    sx = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    out: list[np.ndarray] = []

    sect = np.full_like(x, math.sqrt(1.0 / (4.0 * math.pi)))  # Pbar_0^0
    for m in range(lmax + 1):
        table = np.empty((lmax + 1 - m, x.size))
        table[0] = sect
        prev2 = np.zeros_like(x)
        prev1 = sect
        for l in range(m + 1, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            cur = a * (x * prev1 - b * prev2)
            table[l - m] = cur
            prev2, prev1 = prev1, cur
        out.append(table)
        if m < lmax:
            # sectorial step Pbar_{m+1}^{m+1}; the minus sign is Condon-Shortley
            sect = -math.sqrt((2.0 * m + 3.0) / (2.0 * m + 2.0)) * sx * sect
    return out
