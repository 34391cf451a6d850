"""Independent oracles for the test suite.

Everything here works on realized fields over a fine uniform grid of the
periodic box, never through the coefficient-space formulas it is used to
check.  The rectangle rule is exact for trigonometric polynomials below the
Nyquist limit, so a 16^3 grid certifies every quantity the suite samples to
rounding.
"""

import itertools

import numpy as np

from nsledger.basis import MODE_AMPLITUDE, BasisSet, SpectralField

TWO_PI = 2.0 * np.pi


def unit_grid(n: int):
    x = np.arange(n) * (TWO_PI / n)
    return np.meshgrid(x, x, x, indexing="ij")


def realize_field(field: SpectralField, X):
    """Evaluate the velocity field on the grid; (3, n, n, n) components."""
    comps = [np.zeros_like(X[0]) for _ in range(3)]
    for a, mode in zip(field.coeffs, field.basis.modes):
        if a == 0.0:
            continue
        arg = mode.k[0] * X[0] + mode.k[1] * X[1] + mode.k[2] * X[2]
        prof = np.cos(arg) if mode.phase == "cos" else np.sin(arg)
        e = mode.e
        for i in range(3):
            comps[i] += a * MODE_AMPLITUDE * e[i] * prof
    return comps


def quad_inner(U, V, n: int) -> float:
    """L2 inner product of two realized fields by the rectangle rule."""
    return float(sum((U[i] * V[i]).sum() for i in range(3)) * (TWO_PI / n) ** 3)


def quad_b(u: SpectralField, v: SpectralField, w: SpectralField, X, n: int) -> float:
    """b(u, v, w) by quadrature with the gradient of v taken analytically."""
    U = realize_field(u, X)
    W = realize_field(w, X)
    total = np.zeros_like(X[0])
    for a, mode in zip(v.coeffs, v.basis.modes):
        if a == 0.0:
            continue
        arg = mode.k[0] * X[0] + mode.k[1] * X[1] + mode.k[2] * X[2]
        dprof = -np.sin(arg) if mode.phase == "cos" else np.cos(arg)
        e = mode.e
        for i in range(3):
            ki = mode.k[i]
            if ki == 0:
                continue
            adv = U[i] * (a * MODE_AMPLITUDE * ki * dprof)
            for j in range(3):
                if e[j] != 0.0:
                    total += adv * e[j] * W[j]
    return float(total.sum() * (TWO_PI / n) ** 3)


def enumerate_shells(max_norm_sq: int) -> dict[int, int]:
    """Brute-force count of half-space wavevectors per |k|^2 shell."""
    radius = int(np.ceil(np.sqrt(max_norm_sq)))
    counts: dict[int, int] = {}
    for k in itertools.product(range(-radius, radius + 1), repeat=3):
        if k == (0, 0, 0):
            continue
        first_nonzero = next(x for x in k if x != 0)
        if first_nonzero < 0:
            continue
        n2 = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
        if n2 <= max_norm_sq:
            counts[n2] = counts.get(n2, 0) + 1
    return counts


def random_field(basis: BasisSet, rng, decay: float = 0.0) -> SpectralField:
    coeffs = rng.standard_normal(basis.m)
    if decay:
        coeffs = coeffs / basis.lambdas**decay
    return SpectralField(basis, coeffs)
