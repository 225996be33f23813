"""Densities, correlation kernels, limit kernels, and sampling.

The N-point density is a product of two determinants of one-particle
functions over the norms; the correlation kernel is the biorthogonal
(Christoffel-Darboux-like) sum

    K_t(x, y) = sum_n M_n(x, t) conj(M_n(y, t*-t)) / m_n(t*),

and every n-point correlation is an n x n determinant of it.  Everything is
assembled in (mantissa, log_scale) parts so small-time norms (which underflow
doubles badly) stay exact.

Three limit regimes are implemented for cross-checks: the temporally
homogeneous sine-ratio kernels on the finite domain, the lambda-integral
kernels of the infinite-volume limit (fixed point density rho), and the
translation-invariant sine kernels.  `corr_oracle` brute-forces correlation
functions by quadrature of the density, which is the definitional oracle the
kernel route is tested against.

Sampling is plain Metropolis on the alcove with single-coordinate proposals,
run as many independent lockstep chains; output order is (chain id, step) so
results do not depend on how the chains are interleaved.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .biortho import m_fn_parts, norm_const_log
from .macdonald import AlcoveConfiguration
from .root_systems import DerivedFamily, derive
from .theta_core import AccuracyError, theta_parts

__all__ = [
    "ChainConfig",
    "ConsistencyError",
    "Histogram",
    "InfiniteKernelSpec",
    "KernelSpec",
    "McmcResult",
    "UnsupportedScaleError",
    "corr_det",
    "corr_oracle",
    "density",
    "empirical_density",
    "fredholm_residual",
    "infinite_kernel",
    "kernel",
    "kernel_matrix",
    "mcmc_sample",
    "sine_kernel",
    "trig_kernel",
]


class ConsistencyError(ArithmeticError):
    """A mathematically real quantity came back with too much imaginary part."""


class UnsupportedScaleError(ValueError):
    """Brute-force oracle requested beyond its feasible size."""


@dataclass(frozen=True)
class KernelSpec:
    """Family plus the time pair (t, t_star), 0 < t < t_star."""

    family: object
    t: float
    t_star: float

    def __post_init__(self):
        d = self.family if isinstance(self.family, DerivedFamily) else derive(self.family)
        object.__setattr__(self, "family", d)
        if not 0.0 < self.t < self.t_star:
            raise ValueError(f"need 0 < t < t_star, got t={self.t}, t_star={self.t_star}")

    @property
    def derived(self):
        return self.family


@dataclass(frozen=True)
class InfiniteKernelSpec:
    """Infinite-volume kernel data: reduced family label, density, times."""

    family: str
    rho: float
    t: float
    t_star: float

    def __post_init__(self):
        if self.family not in ("A", "B", "C", "D"):
            raise ValueError(f"family must be one of A,B,C,D, got {self.family!r}")
        if not self.rho > 0.0:
            raise ValueError("rho must be positive")
        if not 0.0 < self.t < self.t_star:
            raise ValueError(f"need 0 < t < t_star, got t={self.t}, t_star={self.t_star}")


# ---------------------------------------------------------------------------
# density

def _norms_log(ks):
    d = ks.derived
    return np.array([norm_const_log(d, j, ks.t_star) for j in range(1, d.spec.N + 1)])


def _stacked_m_parts(d, X, t):
    """Matrices M_j(x_k, t) for a batch of configurations X (B, N).

    Returns (mant, scale) of shape (B, N, N); first matrix index is j.
    """
    B, N = X.shape
    flat = X.reshape(-1)
    mant = np.empty((N, B, N), dtype=complex)
    scale = np.empty((N, B, N))
    for j in range(1, N + 1):
        m, s = m_fn_parts(d, j, flat, t)
        mant[j - 1] = m.reshape(B, N)
        scale[j - 1] = s.reshape(B, N)
    return mant.transpose(1, 0, 2), scale.transpose(1, 0, 2)


def _slogdet_parts(mant, scale):
    """Stacked slogdet of matrices given as parts; returns (sign, log_abs).

    The matrices are row-equilibrated before LU, so a determinant below the
    round-off floor 1e-13 is numerically singular (coincident or wall-pinned
    coordinates); its garbage phase is replaced by an exact zero.
    """
    row = scale.max(axis=2)
    tilde = mant * np.exp(scale - row[..., None])
    sign, logabs = np.linalg.slogdet(tilde)
    dead = (sign == 0) | (logabs < np.log(1e-13))
    sign = np.where(dead, 0.0 + 0.0j, sign)
    return sign, logabs + row.sum(axis=1)


def _log_q_batch(ks, X):
    """log-magnitude and phase of the two-determinant product q for a batch.

    Returns (logmag, phase): logmag -inf marks exact zeros (then phase 1).
    """
    d = ks.derived
    m1, s1 = _stacked_m_parts(d, X, ks.t_star - ks.t)
    sign1, la1 = _slogdet_parts(np.conj(m1), s1)
    m2, s2 = _stacked_m_parts(d, X, ks.t)
    sign2, la2 = _slogdet_parts(m2, s2)
    phase = sign1 * sign2
    logmag = la1 + la2
    dead = (sign1 == 0) | (sign2 == 0)
    logmag = np.where(dead, -np.inf, logmag)
    phase = np.where(dead, 1.0 + 0.0j, phase)
    return logmag, phase


def density_batch(ks, X):
    """p(x) for a batch of coordinate rows X (B, N) in any coordinate order.

    The det-product is permutation invariant, so no sorting is needed; rows
    with repeated coordinates give exactly 0.  The phase of the det product
    must be real to 1e-10 — except on rows whose magnitude is negligible
    within the batch, where near-singular LU phases are round-off noise.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    logmag, phase = _log_q_batch(ks, X)
    live = np.isfinite(logmag)
    top = logmag[live].max() if np.any(live) else 0.0
    with np.errstate(under="ignore"):
        rel_mag = np.where(live, np.exp(logmag - top), 0.0)
    resid = np.abs(phase.imag)
    bad = live & (resid > 1e-10) & (resid * rel_mag > 1e-10)
    if np.any(bad):
        k = int(np.argmax(resid * rel_mag))
        raise ConsistencyError(
            f"density phase carries imaginary residue {phase.imag[k]:.3e} at row {k}"
        )
    lg = logmag - _norms_log(ks).sum()
    with np.errstate(under="ignore"):
        return np.where(live, phase.real * np.exp(np.where(live, lg, 0.0)), 0.0)


def density(ks, xs):
    """N-point density p(x) = det conj(M(t*-t)) det M(t) / prod m_n(t*)."""
    if isinstance(xs, AlcoveConfiguration):
        xs = xs.points
    return float(density_batch(ks, np.asarray(xs, dtype=float)[None, :])[0])


# ---------------------------------------------------------------------------
# correlation kernel

def kernel_matrix(ks, xs, ys):
    """K_t(x, y) on the grid xs x ys, streaming the mode sum in parts form."""
    d = ks.derived
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    lms = _norms_log(ks)
    acc = np.zeros((xs.size, ys.size), dtype=complex)
    top = np.full((xs.size, ys.size), -np.inf)
    for n in range(1, d.spec.N + 1):
        mx, sx = m_fn_parts(d, n, xs, ks.t)
        my, sy = m_fn_parts(d, n, ys, ks.t_star - ks.t)
        term_s = sx[:, None] + sy[None, :] - lms[n - 1]
        term_m = mx[:, None] * np.conj(my)[None, :]
        with np.errstate(under="ignore"):
            top2 = np.maximum(top, term_s)
            shift = np.where(np.isfinite(top), np.exp(top - top2), 0.0)
            acc = acc * shift + term_m * np.exp(term_s - top2)
        top = top2
    with np.errstate(under="ignore"):
        return acc * np.exp(top)


def kernel(ks, x, y):
    """Correlation kernel at a single point pair."""
    return complex(kernel_matrix(ks, [float(x)], [float(y)])[0, 0])


def corr_det(ks, points):
    """n-point correlation via the n x n kernel determinant (n <= N)."""
    pts = np.asarray(points, dtype=float)
    if pts.size > ks.derived.spec.N:
        raise ValueError(f"need n <= N = {ks.derived.spec.N}, got n = {pts.size}")
    km = kernel_matrix(ks, pts, pts)
    val = complex(np.linalg.det(km))
    scale = max(float(np.max(np.abs(np.diag(km)))) ** pts.size, 1e-290)
    if abs(val.imag) > 1e-10 * max(abs(val), scale):
        raise ConsistencyError(f"correlation determinant residue {val.imag:.3e}")
    return val.real


def _gl_nodes(n, a, b):
    u, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * u + 0.5 * (a + b), 0.5 * (b - a) * w


def corr_oracle(ks, points, grid=64):
    """Correlation function by definition: integrate the density over the
    remaining N - n coordinates (unordered, with the 1/(N-n)! factor).

    Gauss-Legendre tensor quadrature; the det-product density is smooth on
    the closed box, so this converges spectrally.  N <= 3 only.
    """
    d = ks.derived
    N = d.spec.N
    if N > 3:
        raise UnsupportedScaleError("corr_oracle supports N <= 3")
    pts = np.asarray(points, dtype=float)
    n = pts.size
    if n > N:
        raise ValueError(f"need n <= N = {N}")
    free = N - n
    if free == 0:
        return float(density_batch(ks, pts[None, :])[0])
    xs, w = _gl_nodes(int(grid), 0.0, d.length)
    grids = np.meshgrid(*([xs] * free), indexing="ij")
    W = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * free), indexing="ij"):
        W = W * g
    Y = np.column_stack([g.ravel() for g in grids])
    X = np.empty((Y.shape[0], N))
    X[:, :n] = pts
    X[:, n:] = Y
    vals = density_batch(ks, X)
    return float(np.sum(vals * W.ravel()) / math.factorial(free))


# ---------------------------------------------------------------------------
# temporally homogeneous (sine-ratio) kernels

_TRIG_TABLE = {
    # tag -> (multiplier c in sin(c u / 2r), sign of the image term)
    "B": (lambda N: 2 * N, -1.0),
    "BC": (lambda N: 2 * N, -1.0),
    "Cv": (lambda N: 2 * N, -1.0),
    "C": (lambda N: 2 * N + 1, -1.0),
    "Bv": (lambda N: 2 * N + 1, -1.0),
    "D": (lambda N: 2 * N - 1, +1.0),
}


def _sin_ratio(c, v):
    """sin(c v)/sin(v) with removable singularities at v = k pi.

    Reduction v -> v - k pi picks up (-1)^{k(c+1)}; near the origin a 5-term
    even Taylor series replaces the ratio.
    """
    v = np.asarray(v, dtype=float)
    k = np.round(v / np.pi)
    v0 = v - k * np.pi
    sign = np.where((k.astype(np.int64) * (c + 1)) % 2 == 0, 1.0, -1.0)
    small = np.abs(v0) < 5e-7
    vs = np.where(small, 0.0, v0)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(c * vs) / np.sin(vs)
    c2 = float(c) * float(c)
    a2 = (1.0 - c2) / 6.0
    a4 = 7.0 / 360.0 - c2 / 36.0 + c2 * c2 / 120.0
    a6 = 31.0 / 15120.0 - 7.0 * c2 / 2160.0 + c2 * c2 / 720.0 - c2**3 / 5040.0
    a8 = (127.0 / 604800.0 - 31.0 * c2 / 90720.0 + 7.0 * c2 * c2 / 43200.0
          - c2**3 / 30240.0 + c2**4 / 362880.0)
    t2 = v0 * v0
    taylor = c * (1.0 + t2 * (a2 + t2 * (a4 + t2 * (a6 + t2 * a8))))
    return sign * np.where(small, taylor, direct)


def trig_kernel(spec, x, y):
    """Large-horizon limit of the middle-time kernel: sine-ratio closed forms.

    Circle family: a single Dirichlet ratio of the difference; interval
    families: difference (or, for the doubled-reflection family, sum) of the
    difference and image ratios.  Real valued.
    """
    d = spec if isinstance(spec, DerivedFamily) else derive(spec)
    r = d.spec.r
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pref = 1.0 / (2.0 * np.pi * r)
    if d.spec.tag == "A":
        out = pref * _sin_ratio(d.spec.N, (x - y) / (2.0 * r))
    else:
        cfn, sgn = _TRIG_TABLE[d.spec.tag]
        c = cfn(d.spec.N)
        out = pref * (_sin_ratio(c, (x - y) / (2.0 * r))
                      + sgn * _sin_ratio(c, (x + y) / (2.0 * r)))
    return float(out) if out.ndim == 0 else out


def sine_kernel(family, x, y, rho):
    """Translation-invariant bulk kernels: sin(pi rho u)/(pi u) combinations."""
    if family not in ("A", "C", "D"):
        raise ValueError(f"sine kernel family must be A, C, or D, got {family!r}")
    if not rho > 0.0:
        raise ValueError("rho must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = rho * np.sinc(rho * (x - y))
    if family == "A":
        out = diff
    else:
        image = rho * np.sinc(rho * (x + y))
        out = diff - image if family == "C" else diff + image
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# infinite-volume lambda-integral kernels

def _inf_integrand(iks, x, y, lam):
    """Integrand of the lambda integral at nodes lam, in parts form."""
    rho, t, ts = iks.rho, iks.t, iks.t_star
    s_idx = 1 if iks.family == "B" else 2
    tau_t = 2j * np.pi * t * rho**2
    tau_s = 2j * np.pi * (ts - t) * rho**2
    tau_d = 2j * np.pi * ts * rho**2
    if iks.family == "A":
        m1, s1 = theta_parts(2, rho * x + 2j * np.pi * t * rho * lam, tau_t)
        m2, s2 = theta_parts(2, rho * y - 2j * np.pi * (ts - t) * rho * lam, tau_s)
        md, sd = theta_parts(2, 2j * np.pi * ts * rho * lam, tau_d)
        mant = np.exp(2j * np.pi * (x - y) * lam) * m1 * m2 / md
        return mant, s1 + s2 - sd
    m1, s1 = theta_parts(s_idx, rho * x + 1j * np.pi * t * rho * lam, tau_t)
    md, sd = theta_parts(2, 1j * np.pi * ts * rho * lam, tau_d)
    m2, s2 = theta_parts(s_idx, rho * y - 1j * np.pi * (ts - t) * rho * lam, tau_s)
    m3, s3 = theta_parts(s_idx, -rho * y - 1j * np.pi * (ts - t) * rho * lam, tau_s)
    sgn = 1.0 if iks.family == "D" else -1.0
    mant_d = np.exp(1j * np.pi * (x - y) * lam) * m1 * m2 / md
    mant_i = np.exp(1j * np.pi * (x + y) * lam) * m1 * m3 / md
    # the two integrals share the node set; combine before quadrature
    sc_d, sc_i = s1 + s2 - sd, s1 + s3 - sd
    top = np.maximum(sc_d, sc_i)
    with np.errstate(under="ignore"):
        mant = 0.5 * (mant_d * np.exp(sc_d - top) + sgn * mant_i * np.exp(sc_i - top))
    return mant, top


def _inf_panels(iks):
    # The integrand switches dominant theta-series term where the continuous
    # peak index crosses the half-integer lattice: at lambda = 0 and rho for
    # the circle reduction, at lambda = 0 for the reflected ones.  The switch
    # happens over a layer of width ~ 1/(4 pi^2 rho T) with T the largest
    # horizon in play, so at big t*rho^2 plain panels stall; grade a short
    # panel of ~45 layer widths onto each switch point instead.
    rho = iks.rho
    if iks.family == "A":
        delta = 1.0 / (4.0 * np.pi**2 * rho * iks.t_star)
        edge = 45.0 * delta
        if edge < rho / 8.0:
            return ((0.0, edge), (edge, 0.5 * rho),
                    (0.5 * rho, rho - edge), (rho - edge, rho))
        return ((0.0, 0.5 * rho), (0.5 * rho, rho))
    delta = 1.0 / (2.0 * np.pi**2 * rho * max(iks.t, iks.t_star - iks.t))
    edge = 45.0 * delta
    if edge < rho / 8.0:
        return ((-rho, -edge), (-edge, 0.0), (0.0, edge), (edge, rho))
    return ((-rho, 0.0), (0.0, rho))


def _inf_quad(iks, x, y, nodes):
    panels = _inf_panels(iks)
    acc = 0.0 + 0.0j
    top = -np.inf
    for lo, hi in panels:
        lam, w = _gl_nodes(max(nodes // len(panels), 8), lo, hi)
        mant, sc = _inf_integrand(iks, x, y, lam)
        t2 = max(top, float(sc.max()))
        with np.errstate(under="ignore"):
            acc = acc * np.exp(top - t2) + np.sum(w * mant * np.exp(sc - t2))
        top = t2
    return acc * np.exp(top)


def infinite_kernel(iks, x, y, nodes=128, tol=1e-9):
    """Infinite-volume kernel via Gauss-Legendre in lambda with node doubling.

    The interval is cut into panels whose ends sit on the integrand's
    dominant-term switch points (see _inf_panels), then the per-panel node
    count doubles until two levels agree to `tol` relative or 2048 total
    nodes are exceeded (then AccuracyError).
    """
    if iks.family != "A" and (x < 0.0 or y < 0.0):
        raise ValueError("reflected-family kernels live on x, y >= 0")
    x, y = float(x), float(y)
    prev = _inf_quad(iks, x, y, int(nodes))
    n = int(nodes)
    while n < 2048:
        n *= 2
        cur = _inf_quad(iks, x, y, n)
        delta = abs(cur - prev)
        if delta <= tol * max(abs(cur), iks.rho):
            return complex(cur)
        prev = cur
    raise AccuracyError(
        f"lambda quadrature not converged at {n} nodes (last delta "
        f"{delta:.3e})"
    )


# ---------------------------------------------------------------------------
# Fredholm / characteristic-function consistency

def _psi_bump(u):
    # smooth compactly supported bump on (0.3, 0.7) of the unit interval
    s = (u - 0.3) / 0.4
    out = np.zeros_like(u)
    inner = (s > 0.0) & (s < 1.0)
    z = 2.0 * s[inner] - 1.0
    out[inner] = np.exp(1.0 - 1.0 / (1.0 - z * z))
    return out


def _psi_hann(u):
    # cosine-squared window on the middle half
    out = np.zeros_like(u)
    inner = (u > 0.25) & (u < 0.75)
    out[inner] = np.cos(np.pi * (u[inner] - 0.5) / 0.5) ** 2
    return out


_TEST_FNS = {
    "bump": _psi_bump,
    "hann": _psi_hann,
    "zero": lambda u: np.zeros_like(u),
}


def fredholm_residual(ks, test_fn_id, theta_param, grid=96):
    """Two routes to the Laplace functional E[exp(theta sum psi(X_j))].

    Route one integrates the density against the exponential weight directly;
    route two is the truncated Fredholm expansion in kernel determinants with
    chi = 1 - e^{theta psi}.  Returns |route1 - route2|.  N <= 2.
    """
    d = ks.derived
    N = d.spec.N
    if N > 2:
        raise UnsupportedScaleError("fredholm_residual supports N <= 2")
    try:
        psi_u = _TEST_FNS[test_fn_id]
    except KeyError:
        raise ValueError(
            f"unknown test function {test_fn_id!r}; have {sorted(_TEST_FNS)}"
        ) from None
    L = d.length
    xs, w = _gl_nodes(int(grid), 0.0, L)
    psi = psi_u(xs / L)
    chi = 1.0 - np.exp(theta_param * psi)

    # route one: Laplace transform of the density
    if N == 1:
        vals = density_batch(ks, xs[:, None])
        direct = float(np.sum(w * np.exp(theta_param * psi) * vals))
    else:
        X1, X2 = np.meshgrid(xs, xs, indexing="ij")
        X = np.column_stack([X1.ravel(), X2.ravel()])
        vals = density_batch(ks, X).reshape(grid, grid)
        weight = np.exp(theta_param * (psi[:, None] + psi[None, :]))
        direct = float(np.einsum("i,j,ij->", w, w, weight * vals)) / 2.0

    # route two: 1 - int chi K + (1/2) int int chi chi det K_2
    km = kernel_matrix(ks, xs, xs)
    dg = np.diag(km)
    if np.max(np.abs(dg.imag)) > 1e-10 * max(float(np.max(np.abs(dg))), 1e-290):
        raise ConsistencyError("kernel diagonal carries imaginary residue")
    diag = dg.real
    expansion = 1.0 - float(np.sum(w * chi * diag))
    if N == 2:
        det2 = diag[:, None] * diag[None, :] - km * km.T
        val2 = np.einsum("i,j,ij->", w * chi, w * chi, det2)
        if abs(val2.imag) > 1e-8 * max(abs(val2), 1.0):
            raise ConsistencyError(f"two-point expansion residue {val2.imag:.3e}")
        expansion += 0.5 * float(val2.real)
    return abs(direct - expansion)


# ---------------------------------------------------------------------------
# Metropolis sampling

@dataclass(frozen=True)
class ChainConfig:
    """Sampling run shape; defaults follow the tested acceptance window."""

    samples: int
    burn_in: int = 10_000
    thinning: int = 20
    proposal_scale: float = None
    chains: int = 64


@dataclass
class McmcResult:
    """Thinned states ordered by (chain id, step), with diagnostics.

    Behaves as a sequence of AlcoveConfiguration; `positions` is the raw
    (n_samples, N) array, row order (chain id, step).
    """

    positions: np.ndarray
    chain_ids: np.ndarray
    acceptance_rates: np.ndarray
    tag: str
    length: float
    warnings: tuple = ()

    def __len__(self):
        return self.positions.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return AlcoveConfiguration(points=tuple(self.positions[i]), tag=self.tag)


def mcmc_sample(ks, chain, seed=0):
    """Metropolis on the alcove: one Gaussian single-coordinate move per step.

    Proposals breaking the strict ordering or the domain walls are rejected
    outright; otherwise accept with the density ratio (computed in log form,
    so tiny densities are fine).  `chain.chains` independent chains run in
    lockstep, each on its own spawned RNG stream; a fixed (seed, config)
    reproduces the output bit for bit.  Acceptance rates outside [0.05, 0.95]
    attach a warning to the result (and warn) rather than failing.
    """
    d = ks.derived
    N, L = d.spec.N, d.length
    C = int(chain.chains)
    sigma = chain.proposal_scale if chain.proposal_scale else L / (8.0 * N)
    per_chain = -(-int(chain.samples) // C)  # ceil
    total_steps = int(chain.burn_in) + per_chain * int(chain.thinning)

    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    gens = [np.random.default_rng(s) for s in root.spawn(C)]

    # start from the evenly spaced interior configuration, jittered per chain
    base = (np.arange(1, N + 1) / (N + 1.0)) * L
    X = np.empty((C, N))
    for c, g in enumerate(gens):
        X[c] = np.sort(base + g.uniform(-0.25, 0.25, size=N) * (L / (N + 1.0)))
    logq, _ = _log_q_batch(ks, X)
    if not np.all(np.isfinite(logq)):
        raise AccuracyError("initial configurations landed on a density zero")

    kept = np.empty((C, per_chain, N))
    accepted = np.zeros(C, dtype=np.int64)
    kept_i = 0
    block = 4096
    done = 0
    hi = L * (1.0 - 1e-12) if d.spec.tag == "A" else L
    while done < total_steps:
        nb = min(block, total_steps - done)
        idx = np.empty((C, nb), dtype=np.int64)
        eps = np.empty((C, nb))
        uni = np.empty((C, nb))
        for c, g in enumerate(gens):
            idx[c] = g.integers(0, N, size=nb)
            eps[c] = g.standard_normal(nb)
            uni[c] = g.random(nb)
        rows = np.arange(C)
        for b in range(nb):
            k = idx[:, b]
            xp = X[rows, k] + sigma * eps[:, b]
            lo = np.where(k > 0, X[rows, np.maximum(k - 1, 0)], 0.0)
            up = np.where(k < N - 1, X[rows, np.minimum(k + 1, N - 1)], hi)
            ok = (xp > lo) & (xp < up) & (xp >= 0.0) & (xp <= hi)
            if np.any(ok):
                Xp = X[ok].copy()
                Xp[np.arange(Xp.shape[0]), k[ok]] = xp[ok]
                lq_new, _ = _log_q_batch(ks, Xp)
                lq_old = logq[ok]
                take = np.log(uni[ok, b]) < (lq_new - lq_old)
                sel = np.flatnonzero(ok)[take]
                X[sel, k[sel]] = xp[sel]
                logq[sel] = lq_new[take]
                step_no = done + b
                if step_no >= chain.burn_in:
                    accepted[sel] += 1
            step_no = done + b
            if step_no >= chain.burn_in and (step_no - chain.burn_in + 1) % chain.thinning == 0:
                kept[:, kept_i] = X
                kept_i += 1
        done += nb

    post = total_steps - chain.burn_in
    rates = accepted / max(post, 1)
    warns = []
    bad = (rates < 0.05) | (rates > 0.95)
    if np.any(bad):
        msg = (f"acceptance rate outside [0.05, 0.95] on {int(bad.sum())} of "
               f"{C} chains (min {rates.min():.3f}, max {rates.max():.3f})")
        warns.append(msg)
        warnings.warn(msg)
    positions = kept.reshape(C * per_chain, N)
    chain_ids = np.repeat(np.arange(C), per_chain)
    return McmcResult(positions=positions, chain_ids=chain_ids,
                      acceptance_rates=rates, tag=d.spec.tag, length=L,
                      warnings=tuple(warns))


# ---------------------------------------------------------------------------
# histograms

@dataclass
class Histogram:
    """One-point histogram normalized to integrate to N, with bin stderr."""

    bin_left: np.ndarray
    bin_right: np.ndarray
    count: np.ndarray
    density: np.ndarray
    stderr: np.ndarray


def empirical_density(samples, bins=40, length=None):
    """Bin all coordinates of all configurations; density integrates to N.

    With an McmcResult the per-bin standard error comes from the spread
    across independent chains; for a bare sequence of configurations it
    falls back to the Poisson estimate sqrt(count).
    """
    if isinstance(samples, McmcResult):
        pos = samples.positions
        ids = samples.chain_ids
        L = samples.length if length is None else float(length)
    else:
        rows = [s.points if isinstance(s, AlcoveConfiguration) else tuple(s) for s in samples]
        if not rows:
            raise ValueError("empty sample set")
        pos = np.asarray(rows, dtype=float)
        ids = None
        if length is None:
            raise ValueError("length is required for a bare sample sequence")
        L = float(length)
    nconf, N = pos.shape
    edges = np.linspace(0.0, L, int(bins) + 1)
    width = edges[1] - edges[0]
    count, _ = np.histogram(pos.ravel(), bins=edges)
    dens = count / (nconf * width)
    if ids is not None and np.unique(ids).size > 1:
        uniq = np.unique(ids)
        per = np.empty((uniq.size, int(bins)))
        for i, c in enumerate(uniq):
            rows_c = pos[ids == c]
            cc, _ = np.histogram(rows_c.ravel(), bins=edges)
            per[i] = cc / (rows_c.shape[0] * width)
        stderr = per.std(axis=0, ddof=1) / np.sqrt(uniq.size)
    else:
        stderr = np.sqrt(count) / (nconf * width)
    return Histogram(bin_left=edges[:-1], bin_right=edges[1:],
                     count=count, density=dens, stderr=stderr)
