"""Determinant identities for the seven families.

The N x N matrix of one-particle functions evaluated on a configuration has a
closed-form determinant: a known unit phase, a time coefficient a(t) built
from nome powers and Euler products, and a product factor W (the elliptic
Weyl-denominator) -- for the circle family times one extra theta of the
coordinate sum whose index follows the parity of N.

Because a(t) carries nome exponents like q^{-N(3N-1)/8}, the whole identity
is assembled in (log-magnitude, phase) form; `denominator_residual` compares
both sides after common-scale cancellation, so it stays finite where direct
evaluation would overflow doubles.

`selberg_check` integrates the squared-denominator product over the box and
compares with the closed form N! prod(norms) / (a(t*-t) a(t)): a tensor
midpoint grid for N <= 2, or seeded Monte Carlo for N <= 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .biortho import m_fn_parts, norm_const_log
from .root_systems import DerivedFamily, derive
from .theta_core import AccuracyError, eta_and_q, theta_parts

__all__ = [
    "AlcoveConfiguration",
    "DegenerateConfigError",
    "IllConditionedError",
    "NormAlphaTilde",
    "SelbergResult",
    "coeff_a",
    "coeff_a_log",
    "denominator_residual",
    "det_m_logc",
    "norm_alpha_tilde",
    "rhs_logc",
    "selberg_check",
    "weyl_w",
    "weyl_w_parts",
]

_COND_LIMIT = 1e12


class IllConditionedError(ArithmeticError):
    """Matrix condition estimate beyond what the residual can support."""


class DegenerateConfigError(ValueError):
    """Configuration makes both sides of an identity vanish (0/0 residual)."""


@dataclass(frozen=True)
class AlcoveConfiguration:
    """Strictly ordered points in a family's alcove."""

    points: tuple
    tag: str

    @classmethod
    def from_points(cls, spec, points):
        d = spec if isinstance(spec, DerivedFamily) else derive(spec)
        pts = tuple(float(p) for p in points)
        if len(pts) != d.spec.N:
            raise ValueError(f"expected {d.spec.N} points, got {len(pts)}")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"points must be strictly increasing, got {pts}")
        if pts[0] < 0.0:
            raise ValueError("points must be nonnegative")
        if d.spec.tag == "A":
            if pts[-1] >= d.length:
                raise ValueError(f"circle alcove requires x_N < {d.length}")
        elif pts[-1] > d.length:
            raise ValueError(f"interval alcove requires x_N <= {d.length}")
        return cls(points=pts, tag=d.spec.tag)


@dataclass(frozen=True)
class NormAlphaTilde:
    """Norm parameter of the circle family's extra theta factor.

    value = N tau/2 for even N, (1 + N tau)/2 for odd N; the half-integer
    real shift in the odd case is exactly what turns the index-3 series into
    the index-0 one, so the parity-dependent theta index lives here.
    """

    N: int
    value: complex

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @classmethod
    def from_tau(cls, N, tau):
        tau = complex(tau)
        v = 0.5 * N * tau if N % 2 == 0 else 0.5 * (1.0 + N * tau)
        return cls(N=int(N), value=v)

    @property
    def theta_index(self):
        """Index of the coordinate-sum theta in the determinant identity."""
        return 0 if self.N % 2 == 0 else 3


def norm_alpha_tilde(N, tau):
    return NormAlphaTilde.from_tau(N, tau).value


# ---------------------------------------------------------------------------
# log-magnitude + phase helpers

def _logc_from_parts(mant, scale):
    """(mantissa, log_scale) -> (log_mag, unit phase); zero maps to (-inf, 1)."""
    a = np.abs(mant)
    if a == 0.0:
        return -np.inf, 1.0 + 0.0j
    return float(np.log(a) + scale), complex(mant / a)


def _logc_rel_diff(l1, p1, l2, p2):
    """|A - B| / max(|A|, |B|) with A = p1 e^{l1}, B = p2 e^{l2}."""
    if l1 == -np.inf and l2 == -np.inf:
        raise DegenerateConfigError("both sides vanish; residual undefined")
    top = max(l1, l2)
    with np.errstate(under="ignore"):
        return float(abs(p1 * np.exp(l1 - top) - p2 * np.exp(l2 - top)))


# ---------------------------------------------------------------------------
# Weyl denominators

# per-family single-coordinate factors: (theta index, arg multiple, tau multiple)
_SINGLES = {
    "A": (),
    "B": ((1, 1.0, 1.0),),
    "Bv": ((1, 2.0, 2.0),),
    "C": ((1, 2.0, 1.0),),
    "Cv": ((1, 1.0, 0.5),),
    "BC": ((1, 1.0, 1.0), (0, 2.0, 2.0)),
    "D": (),
}


def weyl_w_parts(tag, xi, tau):
    """W factor at scaled coordinates xi, batched: xi of shape (N,) or (B, N).

    Returns (mantissa, log_scale) arrays of shape (B,).  The pair factors use
    differences and (except for the circle family) sums of coordinates; the
    single-coordinate factors follow the family table.
    """
    X = np.atleast_2d(np.asarray(xi, dtype=float))
    nb, N = X.shape
    mant = np.ones(nb, dtype=complex)
    scale = np.zeros(nb)
    ju, ku = np.triu_indices(N, 1)
    if ju.size:
        m, s = theta_parts(1, X[:, ku] - X[:, ju], tau)
        mant *= np.prod(m, axis=1)
        scale += np.sum(s, axis=1)
        if tag != "A":
            m, s = theta_parts(1, X[:, ku] + X[:, ju], tau)
            mant *= np.prod(m, axis=1)
            scale += np.sum(s, axis=1)
    for idx, amul, tmul in _SINGLES[tag]:
        m, s = theta_parts(idx, amul * X, tmul * tau)
        mant *= np.prod(m, axis=1)
        scale += np.sum(s, axis=1)
    return mant, scale


def weyl_w(spec, xs, tau):
    """W^R(xi(x); tau) for positions xs (xi = x / 2 pi r).  Complex; exact 0
    when a factor vanishes.  Overflow-prone at extreme tau -- use
    weyl_w_parts there."""
    d = derive(spec) if not isinstance(spec, DerivedFamily) else spec
    if isinstance(xs, AlcoveConfiguration):
        xs = xs.points
    xi = np.asarray(xs, dtype=float) / (2.0 * np.pi * d.spec.r)
    mant, scale = weyl_w_parts(d.spec.tag, xi, tau)
    with np.errstate(over="ignore"):
        out = mant * np.exp(scale)
    return complex(out[0]) if np.ndim(xs) == 1 else out


# ---------------------------------------------------------------------------
# time coefficients a(t)

# family -> (prefactor, q exponent fn, ((tau multiple, q0 exponent fn), ...))
_A_TABLE = {
    "A": (1.0, lambda N: -N * (3 * N - 1) / 8, ((1.0, lambda N: -(N - 1) * (N - 2) / 2),)),
    "B": (2.0, lambda N: -N * (N - 1) / 4, ((1.0, lambda N: -N * (N - 1)),)),
    "Bv": (
        2.0,
        lambda N: -N * (N - 1) / 4,
        ((1.0, lambda N: -((N - 1) ** 2)), (2.0, lambda N: -(N - 1))),
    ),
    "C": (1.0, lambda N: -N * N / 4, ((1.0, lambda N: -N * (N - 1)),)),
    "Cv": (
        1.0,
        lambda N: -N * (2 * N - 1) / 8,
        ((1.0, lambda N: -((N - 1) ** 2)), (0.5, lambda N: -(N - 1))),
    ),
    "BC": (
        1.0,
        lambda N: -N * (N + 1) / 4,
        ((1.0, lambda N: -N * (N - 1)), (2.0, lambda N: -N)),
    ),
    "D": (4.0, lambda N: -N * (N - 1) / 4, ((1.0, lambda N: -N * (N - 2)),)),
}


def coeff_a_log(spec, t):
    """log a(t); the coefficients are positive reals with huge dynamic range."""
    d = derive(spec) if not isinstance(spec, DerivedFamily) else spec
    if not t > 0.0:
        raise ValueError(f"need t > 0, got {t}")
    N = d.spec.N
    tau = 1j * d.size * t / (2.0 * np.pi * d.spec.r**2)
    pref, qexp, q0_terms = _A_TABLE[d.spec.tag]
    out = np.log(pref) + qexp(N) * (-np.pi * tau.imag)  # log q(tau) = -pi Im tau
    for tmul, e in q0_terms:
        _, q0, _ = eta_and_q(tmul * tau)
        out += e(N) * np.log(q0.real)
    return float(out)


def coeff_a(spec, t):
    """a(t) as a float; raises OverflowError when only the log form fits."""
    lg = coeff_a_log(spec, t)
    if lg > 709.0:
        raise OverflowError(
            f"a(t) = exp({lg:.1f}) exceeds double range; use coeff_a_log"
        )
    return float(np.exp(lg))


# ---------------------------------------------------------------------------
# determinant identity

def _det_phase(tag, N):
    """Unit phase on the closed-form side: i-powers fixed by family and parity."""
    if tag == "A":
        e = (N // 2) if N % 2 == 0 else -((N - 1) // 2)
    elif tag in ("C", "Cv", "BC"):
        e = -N
    else:
        e = 0
    return (1j) ** (e % 4)


def det_m_logc(spec, xs, t, cond_limit=_COND_LIMIT):
    """log-magnitude and phase of det[M_j(x_k, t)], with per-row rescaling.

    LU with partial pivoting via slogdet; raises IllConditionedError when the
    rescaled matrix's condition estimate exceeds `cond_limit`.
    """
    d = derive(spec) if not isinstance(spec, DerivedFamily) else spec
    if isinstance(xs, AlcoveConfiguration):
        xs = xs.points
    xs = np.asarray(xs, dtype=float)
    N = d.spec.N
    mant = np.empty((N, N), dtype=complex)
    scale = np.empty((N, N))
    for j in range(1, N + 1):
        mant[j - 1], scale[j - 1] = m_fn_parts(d, j, xs, t)
    row = scale.max(axis=1)
    tilde = mant * np.exp(scale - row[:, None])
    cond = np.linalg.cond(tilde)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"matrix condition ~ {cond:.3e} exceeds {cond_limit:.1e}"
        )
    sign, logabs = np.linalg.slogdet(tilde)
    if sign == 0:
        return -np.inf, 1.0 + 0.0j
    return float(logabs + row.sum()), complex(sign)


def rhs_logc(spec, xs, t):
    """Closed-form side of the determinant identity, as (log_mag, phase)."""
    d = derive(spec) if not isinstance(spec, DerivedFamily) else spec
    if isinstance(xs, AlcoveConfiguration):
        xs = xs.points
    xi = np.asarray(xs, dtype=float) / (2.0 * np.pi * d.spec.r)
    tau = 1j * d.size * t / (2.0 * np.pi * d.spec.r**2)
    wm, wsc = weyl_w_parts(d.spec.tag, xi, tau)
    lw, pw = _logc_from_parts(complex(wm[0]), float(wsc[0]))
    lg = coeff_a_log(d, t) + lw
    ph = _det_phase(d.spec.tag, d.spec.N) * pw
    if d.spec.tag == "A":
        s_idx = NormAlphaTilde.from_tau(d.spec.N, tau).theta_index
        m, s = theta_parts(s_idx, float(xi.sum()), tau)
        lt, pt = _logc_from_parts(m, s)
        lg += lt
        ph *= pt
    return lg, ph


def denominator_residual(spec, xs, t):
    """Relative difference between det[M_j(x_k, t)] and its closed form.

    Both sides in (log-magnitude, phase); DegenerateConfigError when both
    vanish, IllConditionedError when the matrix cannot support the residual.
    """
    d = derive(spec) if not isinstance(spec, DerivedFamily) else spec
    if not t > 0.0:
        raise ValueError(f"need t > 0, got {t}")
    lr, pr = rhs_logc(d, xs, t)
    if lr == -np.inf:
        raise DegenerateConfigError(
            "closed-form side vanishes (coincident points or a wall zero); "
            "residual undefined"
        )
    ll, pl = det_m_logc(d, xs, t)
    return _logc_rel_diff(ll, pl, lr, pr)


# ---------------------------------------------------------------------------
# Selberg-type integral checks

@dataclass(frozen=True)
class SelbergResult:
    lhs: float
    rhs: float
    rel_err: float


def _selberg_integrand(d, X, t, t_star):
    """Integrand on a batch of configurations X (B, N): the two W factors and,
    for the circle family, the two parity-indexed thetas of the coordinate sum."""
    xi = X / (2.0 * np.pi * d.spec.r)
    tau_s = 1j * d.size * (t_star - t) / (2.0 * np.pi * d.spec.r**2)
    tau_t = 1j * d.size * t / (2.0 * np.pi * d.spec.r**2)
    m1, s1 = weyl_w_parts(d.spec.tag, xi, tau_s)
    m2, s2 = weyl_w_parts(d.spec.tag, xi, tau_t)
    mant = m1 * m2
    scale = s1 + s2
    if d.spec.tag == "A":
        s_idx = NormAlphaTilde.from_tau(d.spec.N, tau_t).theta_index
        tot = xi.sum(axis=1)
        for tau in (tau_s, tau_t):
            m, s = theta_parts(s_idx, tot, tau)
            mant *= m
            scale += s
    vals = mant * np.exp(scale)
    if np.max(np.abs(vals.imag)) > 1e-10 * max(np.max(np.abs(vals.real)), 1e-300):
        raise AccuracyError("Selberg integrand lost realness")
    return vals.real


def selberg_check(spec, t, t_star, method="grid", budget=None, seed=0, workers=1,
                  tol=None):
    """Integral of the squared-denominator product vs its closed form.

    method="grid": tensor midpoint rule with `budget` nodes per dimension
    (N <= 2); midpoint avoids the alcove-wall zeros sitting on nodes.
    method="mc": plain Monte Carlo with `budget` total samples (N <= 4), an
    explicit seed (int or SeedSequence), and `workers` deterministic sample
    blocks -- results are identical for a fixed (seed, workers) pair.

    Returns SelbergResult(lhs, rhs, rel_err).  With `tol` set, a budget that
    leaves rel_err above tol raises AccuracyError carrying the best estimate
    on the exception's .result attribute.
    """
    d = derive(spec) if not isinstance(spec, DerivedFamily) else spec
    if not 0.0 < t < t_star:
        raise ValueError(f"need 0 < t < t_star, got t={t}, t_star={t_star}")
    N = d.spec.N
    L = 2.0 * np.pi * d.spec.r if d.spec.tag == "A" else np.pi * d.spec.r

    lg_rhs = -coeff_a_log(d, t_star - t) - coeff_a_log(d, t)
    for n in range(1, N + 1):
        lg_rhs += norm_const_log(d, n, t_star)
    rhs = float(math.factorial(N) * np.exp(lg_rhs))

    if method == "grid":
        if N > 2:
            raise ValueError("grid method supports N <= 2")
        n = int(budget) if budget else 512
        xs1 = (np.arange(n) + 0.5) * (L / n)
        if N == 1:
            X = xs1[:, None]
        else:
            a, b = np.meshgrid(xs1, xs1, indexing="ij")
            X = np.column_stack([a.ravel(), b.ravel()])
        vals = _selberg_integrand(d, X, t, t_star)
        lhs = float(vals.sum() * (L / n) ** N)
    elif method == "mc":
        if N > 4:
            raise ValueError("mc method supports N <= 4")
        total = int(budget) if budget else 200_000
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        streams = root.spawn(int(workers))
        sizes = [total // workers + (1 if i < total % workers else 0) for i in range(workers)]
        acc = 0.0
        for ss, nblock in zip(streams, sizes):
            rng = np.random.default_rng(ss)
            X = rng.uniform(0.0, L, size=(nblock, N))
            acc += float(_selberg_integrand(d, X, t, t_star).sum())
        lhs = acc / total * L**N
    else:
        raise ValueError(f"unknown method {method!r}")
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    out = SelbergResult(lhs=lhs, rhs=rhs, rel_err=rel)
    if tol is not None and rel > tol:
        err = AccuracyError(
            f"budget {budget} exhausted at rel_err {rel:.3e} > tol {tol:.1e}"
        )
        err.result = out
        raise err
    return out
