"""Biorthogonal one-particle theta systems for the seven families.

For a family (tag, N, r) the N one-particle functions at time t are built from
a single building block per sharp shape:

    block_A(sigma, z | tau) = e^{2 pi i sigma z} theta_2(sigma tau + z | tau)
    block_B(sigma, z | tau) = e^{2 pi i sigma z} theta_1(sigma tau + z | tau)
                            - e^{-2 pi i sigma z} theta_1(sigma tau - z | tau)
    block_C = the theta_2 analogue of block_B (minus sign)
    block_D = the theta_2 analogue with a plus sign

evaluated at sigma = J(j)/size, z = size * xi(x), tau = size^2 * tau_t, where
xi(x) = x/(2 pi r) and tau_t = i t/(2 pi r^2) are the scaled coordinates.

The j-th function at time t*-t and the k-th at time t are biorthogonal on the
alcove: integrating conj(f_j(x, t*-t)) f_k(x, t) dx returns norm(j) delta_jk,
with closed-form norms (`norm_const`).  `gram` verifies this numerically with
a spectrally convergent trapezoid rule.

Everything is vectorized over x; `..._parts` variants return values in
(mantissa, log_scale) form for determinant work at large time scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .root_systems import FamilySpec, DerivedFamily, derive
from .theta_core import AccuracyError, theta_parts

__all__ = [
    "BiorthoFamily",
    "GramResult",
    "ScaledCoords",
    "gram",
    "gram_converged",
    "m_fn",
    "m_fn_parts",
    "norm_const",
    "norm_const_log",
    "scaled",
    "theta_block",
    "theta_block_parts",
]


@dataclass(frozen=True)
class ScaledCoords:
    xi: object  # scalar or ndarray
    tau_t: complex


@dataclass(frozen=True)
class BiorthoFamily:
    spec: FamilySpec
    t_star: float

    def __post_init__(self):
        if not (self.t_star > 0.0 and np.isfinite(self.t_star)):
            raise ValueError(f"t_star must be positive and finite, got {self.t_star}")


@dataclass(frozen=True)
class GramResult:
    matrix: np.ndarray
    error_estimate: float
    nodes: int


def scaled(x, t, r):
    """Dimensionless coordinates: xi = x/(2 pi r), tau_t = i t/(2 pi r^2)."""
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if r <= 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    xi = np.asarray(x, dtype=float) / (2.0 * np.pi * r)
    if xi.ndim == 0:
        xi = float(xi)
    return ScaledCoords(xi=xi, tau_t=1j * t / (2.0 * np.pi * r * r))


def theta_block_parts(shape, sigma, z, tau):
    """One building block in (mantissa, log_scale) form, vectorized over z."""
    z = np.asarray(z, dtype=complex)
    arg = sigma * tau + z
    if shape == "A":
        m, s = theta_parts(2, arg, tau)
        e = 2j * np.pi * sigma * z
        return np.atleast_1d(m * np.exp(1j * np.atleast_1d(e).imag)), np.atleast_1d(
            s + np.atleast_1d(e).real
        )
    idx = 1 if shape == "B" else 2
    sign = 1.0 if shape == "D" else -1.0
    m1, s1 = theta_parts(idx, arg, tau)
    m2, s2 = theta_parts(idx, sigma * tau - z, tau)
    e = np.atleast_1d(2j * np.pi * sigma * z)
    m1 = np.atleast_1d(m1) * np.exp(1j * e.imag)
    s1 = np.atleast_1d(s1) + e.real
    m2 = np.atleast_1d(m2) * np.exp(-1j * e.imag)
    s2 = np.atleast_1d(s2) - e.real
    top = np.maximum(s1, s2)
    with np.errstate(under="ignore"):
        mant = m1 * np.exp(s1 - top) + sign * m2 * np.exp(s2 - top)
    return mant, top


def theta_block(shape, sigma, z, tau):
    """Building block for sharp shape "A"/"B"/"C"/"D"; see module docstring."""
    if shape not in ("A", "B", "C", "D"):
        raise ValueError(f"unknown block shape {shape!r}")
    m, s = theta_block_parts(shape, sigma, z, tau)
    with np.errstate(over="ignore"):
        out = m * np.exp(s)
    if np.ndim(z) == 0:
        return complex(out[0])
    return out


def _derived(spec):
    if isinstance(spec, DerivedFamily):
        return spec
    return derive(spec)


def m_fn_parts(spec, j, x, t):
    """One-particle function j (1-based) at positions x, time t, in parts form."""
    d = _derived(spec)
    if not 1 <= j <= d.spec.N:
        raise ValueError(f"function index j must be in 1..{d.spec.N}, got {j}")
    sc = scaled(x, t, d.spec.r)
    size = d.size
    sigma = d.offsets[j - 1] / size
    z = size * np.asarray(sc.xi, dtype=float)
    tau = size * size * sc.tau_t
    return theta_block_parts(d.sharp, sigma, z, tau)


def m_fn(spec, j, x, t):
    d = _derived(spec)
    m, s = m_fn_parts(d, j, x, t)
    with np.errstate(over="ignore"):
        out = m * np.exp(s)
    if np.ndim(x) == 0:
        return complex(out[0])
    return out


# families whose first (or first and last) norms carry a doubling factor
def _norm_multiplier(d, j):
    if d.spec.tag in ("B", "Bv") and j == 1:
        return 2.0
    if d.spec.tag == "D" and j in (1, d.spec.N):
        return 2.0
    return 1.0


def norm_const_log(spec, j, t_star):
    """log of the j-th biorthogonality norm (they are positive reals)."""
    d = _derived(spec)
    if not 1 <= j <= d.spec.N:
        raise ValueError(f"function index j must be in 1..{d.spec.N}, got {j}")
    if t_star <= 0.0:
        raise ValueError("t_star must be positive")
    tau_t = 1j * t_star / (2.0 * np.pi * d.spec.r**2)
    size = d.size
    m, s = theta_parts(2, size * d.offsets[j - 1] * tau_t, size * size * tau_t)
    val = complex(m)
    if not (abs(val.imag) <= 1e-12 * abs(val) and val.real > 0.0):
        raise AccuracyError(f"norm lost positivity: mantissa {val} for j={j}")
    return float(
        np.log(2.0 * np.pi * d.spec.r * _norm_multiplier(d, j) * val.real) + s
    )


def norm_const(spec, j, t_star):
    """Biorthogonality norm of function j at horizon t_star (positive real)."""
    return float(np.exp(norm_const_log(spec, j, t_star)))


def gram(family, t, nodes=128):
    """Cross-Gram matrix of the system against itself across the horizon.

    Entry (j, k) integrates conj(f_j(x, t*-t)) f_k(x, t) over the alcove with a
    composite trapezoid rule on `nodes` points.  The integrand extends to a
    smooth periodic function (periodically for the circle family, evenly across
    both walls for the interval families), so the rule converges spectrally.
    Returns the matrix at `nodes` together with an error estimate from one
    further node doubling.
    """
    if not isinstance(family, BiorthoFamily):
        raise ValueError("gram expects a BiorthoFamily")
    if not 0.0 < t < family.t_star:
        raise ValueError(f"need 0 < t < t_star = {family.t_star}, got t = {t}")
    if nodes < 2:
        raise ValueError("need at least two trapezoid nodes")
    d = derive(family.spec)

    def grid_matrix(n):
        xs = np.linspace(0.0, d.length, n)
        h = d.length / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        rows_s = np.empty((d.spec.N, n), dtype=complex)
        rows_t = np.empty((d.spec.N, n), dtype=complex)
        for j in range(1, d.spec.N + 1):
            ms, ss = m_fn_parts(d, j, xs, family.t_star - t)
            mt, st = m_fn_parts(d, j, xs, t)
            rows_s[j - 1] = ms * np.exp(ss)
            rows_t[j - 1] = mt * np.exp(st)
        return np.einsum("i,ji,ki->jk", w, rows_s.conj(), rows_t)

    coarse = grid_matrix(nodes)
    fine = grid_matrix(2 * nodes - 1)
    err = float(np.max(np.abs(fine - coarse)))
    return GramResult(matrix=coarse, error_estimate=err, nodes=nodes)


def gram_converged(family, t, tol=1e-11, start=128, cap=8192):
    """Double trapezoid nodes from `start` until the doubling estimate, scaled
    by the largest norm, drops below `tol`; AccuracyError past `cap` nodes."""
    d = derive(family.spec)
    norms = [norm_const(d, j, family.t_star) for j in range(1, d.spec.N + 1)]
    scale = max(norms)
    n = start
    while n <= cap:
        res = gram(family, t, n)
        if res.error_estimate <= tol * scale:
            return res
        n = 2 * n
    raise AccuracyError(
        f"gram did not converge below {tol} relative by {cap} nodes "
        f"(last estimate {res.error_estimate / scale:.3e})"
    )
