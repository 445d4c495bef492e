"""Real trigonometric polynomials on the circle.

Coefficients are stored as ``[a0, a1..aK, b1..bK]`` for

    f(phi) = a0 + sum_k a_k cos(k phi) + b_k sin(k phi)

Every detection probability of an N-photon input is such a polynomial
with K <= N, which is why fitting and differentiating in this basis is exact.
"""

from __future__ import annotations

import numpy as np


def design_matrix(phis, degree: int) -> np.ndarray:
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    k = np.arange(1, degree + 1)
    arg = np.outer(phis, k)
    return np.hstack([np.ones((phis.size, 1)), np.cos(arg), np.sin(arg)])


def fit(phis, values, degree: int) -> np.ndarray:
    """Least-squares fit; ``values`` may be 1-D or (len(phis), m) for m curves at once."""
    phis = np.asarray(phis, dtype=float)
    if phis.size < 2 * degree + 1:
        raise ValueError(f"need at least {2 * degree + 1} points for degree {degree}, got {phis.size}")
    coeffs, *_ = np.linalg.lstsq(design_matrix(phis, degree), np.asarray(values, dtype=float), rcond=None)
    return coeffs


def degree_of(coeffs) -> int:
    return (np.shape(coeffs)[0] - 1) // 2


def evaluate(coeffs, phis) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    return design_matrix(phis, degree_of(coeffs)) @ coeffs


def derivative(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    deg = degree_of(coeffs)
    k = np.arange(1, deg + 1).reshape((-1,) + (1,) * (coeffs.ndim - 1))
    a, b = coeffs[1 : deg + 1], coeffs[deg + 1 :]
    out = np.zeros_like(coeffs)
    out[1 : deg + 1] = k * b
    out[deg + 1 :] = -k * a
    return out


def harmonic_amplitudes(coeffs) -> np.ndarray:
    """sqrt(a_k^2 + b_k^2) for k = 0..K (k = 0 gives |a0|)."""
    coeffs = np.asarray(coeffs, dtype=float)
    deg = degree_of(coeffs)
    amps = np.hypot(coeffs[1 : deg + 1], coeffs[deg + 1 :])
    return np.concatenate([np.abs(coeffs[:1]), amps])


def sample_points(degree: int) -> np.ndarray:
    """2K+1 equally spaced nodes; enough to pin down a degree-K polynomial exactly."""
    n = 2 * degree + 1
    return 2 * np.pi * np.arange(n) / n
