"""Boundary-conditioned heat kernels and the pinned-path determinant identities.

The four transition kernels (periodic circle, absorbing/reflecting interval
walls in the three combinations) are evaluated in theta form; a Gaussian
winding-image sum is kept alongside as an oracle.  The family-indexed weight
matrices r(t) tie products r(t) . p(0, v; t, x) back to the biorthogonal
function matrices, which cascades into the Weyl-denominator and
bridge-density identities checked here.

Conventions
-----------
Transition arguments follow (s, x) -> (t, y); all kernels depend on t - s
only.  The circle kernel with even parity is a *signed* kernel (alternating
windings) and must not be treated as a probability density.
"""

import math

import numpy as np

from .macdonald import (
    IllConditionedError,
    _logc_from_parts,
    _logc_rel_diff,
    coeff_a_log,
    weyl_w_parts,
)
from .biortho import m_fn_parts
from .root_systems import DerivedFamily, derive
from .theta_core import AccuracyError, eta_and_q, theta, theta_parts

__all__ = [
    "BoundaryKind",
    "RMatrix",
    "boundary_of",
    "bridge_density",
    "ck_det_residual",
    "ck_residual",
    "eta_formula_residual",
    "macdonald_kmlgv_residual",
    "matrix_identity_residual",
    "r_matrix",
    "transition",
    "transition_images",
]

_KINDS = ("circ", "ar", "aa", "rr")


from dataclasses import dataclass


@dataclass(frozen=True)
class BoundaryKind:
    """Wall behaviour: "circ" (periodic; needs parity), "ar", "aa" or "rr"."""

    tag: str
    parity: str | None = None

    def __post_init__(self):
        if self.tag not in _KINDS:
            raise ValueError(f"tag must be one of {_KINDS}, got {self.tag!r}")
        if self.tag == "circ":
            if self.parity not in ("even", "odd"):
                raise ValueError("circ needs parity 'even' or 'odd'")
        elif self.parity is not None:
            raise ValueError(f"parity only applies to circ, got {self.parity!r}")


def _derived(spec):
    return spec if isinstance(spec, DerivedFamily) else derive(spec)


def boundary_of(spec):
    """The boundary kind of a family's bridge process."""
    d = _derived(spec)
    return BoundaryKind(tag=d.walls, parity=d.parity)


# ---------------------------------------------------------------------------
# transition kernels

def transition(bk, s, x, t, y, r):
    """Transition density p(s, x; t, y) for the given boundary kind.

    Theta form; broadcasts over array x or y.  Domain length is 2 pi r for
    circ, pi r for the interval kinds.
    """
    if not t > s:
        raise ValueError(f"need t > s, got s={s}, t={t}")
    L = 2.0 * math.pi * r
    tau = 1j * (t - s) / (2.0 * math.pi * r * r)
    xm = (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) / L
    if bk.tag == "circ":
        idx = 2 if bk.parity == "even" else 3
        val = theta(idx, xm, tau) / L
    else:
        xp = (np.asarray(x, dtype=float) + np.asarray(y, dtype=float)) / L
        idx = 2 if bk.tag == "ar" else 3
        sign = 1.0 if bk.tag == "rr" else -1.0
        val = (theta(idx, xm, tau) + sign * theta(idx, xp, tau)) / L
    out = np.real(val)
    return float(out) if np.ndim(out) == 0 else out


def transition_images(bk, s, x, t, y, r, windings):
    """Winding-image Gaussian sum -- direct oracle for `transition`.

    Sums the heat kernel over `windings` images either side.  If the
    first-omitted-image tail bound exceeds 1e-14 the truncation is not
    trustworthy and an AccuracyError asks for more windings.
    """
    if not t > s:
        raise ValueError(f"need t > s, got s={s}, t={t}")
    W = int(windings)
    if W < 1:
        raise ValueError(f"windings must be >= 1, got {windings}")
    dt = t - s
    L = 2.0 * math.pi * r

    def gauss(u):
        return np.exp(-u * u / (2.0 * dt)) / math.sqrt(2.0 * math.pi * dt)

    w = np.arange(-W, W + 1, dtype=float)
    um = x - y + L * w
    alt = (-1.0) ** np.abs(w)
    if bk.tag == "circ":
        terms = gauss(um) * (alt if bk.parity == "even" else 1.0)
        umax = abs(x - y)
        n_args = 1
    else:
        up = x + y + L * w
        sign = 1.0 if bk.tag == "rr" else -1.0
        pair = gauss(um) + sign * gauss(up)
        terms = pair * (alt if bk.tag == "ar" else 1.0)
        umax = max(abs(x - y), abs(x + y))
        n_args = 2

    b = L * (W + 1) - umax
    if b <= 0.0:
        raise AccuracyError("winding cutoff inside the argument range; raise windings")
    tail = 2 * n_args * float(gauss(b)) / (1.0 - math.exp(-L * b / dt))
    if tail > 1e-14:
        raise AccuracyError(
            f"winding tail bound {tail:.3e} exceeds 1e-14; raise windings")
    return float(np.sum(terms))


# ---------------------------------------------------------------------------
# Chapman-Kolmogorov residuals

_MIN_GAP = 1e-6  # times r^2; quadrature refuses sharper kernels


def _ck_grid(bk, r, nodes):
    # interval kernels extend smoothly and 2 pi r-periodically through the
    # walls (even/odd images), so trapezoid with endpoint half-weights is
    # spectrally accurate there too, not just on the periodic circle.
    n = int(nodes)
    if bk.tag == "circ":
        L = 2.0 * math.pi * r
        y = np.arange(n) * (L / n)
        w = np.full(n, L / n)
    else:
        L = math.pi * r
        y = np.linspace(0.0, L, n + 1)
        w = np.full(n + 1, L / n)
        w[0] = w[-1] = 0.5 * L / n
    return y, w


def _check_gaps(r, *gaps):
    for g in gaps:
        if g < _MIN_GAP * r * r:
            raise ValueError(
                f"time gap {g:.3e} below {_MIN_GAP} r^2; kernel too peaked for quadrature")


def ck_residual(bk, s, t, u, x, z, r, nodes=512):
    """|integral p(s,x;t,y) p(t,y;u,z) dy  -  p(s,x;u,z)| on the kind's domain."""
    if not s < t < u:
        raise ValueError(f"need s < t < u, got {s}, {t}, {u}")
    _check_gaps(r, t - s, u - t)
    y, w = _ck_grid(bk, r, nodes)
    lhs = float(np.sum(w * transition(bk, s, x, t, y, r)
                       * transition(bk, t, y, u, z, r)))
    return abs(lhs - transition(bk, s, x, u, z, r))


def ck_det_residual(bk, s, t, u, xs, zs, r, nodes=160):
    """Two-particle determinant version of Chapman-Kolmogorov.

    Integrates det[p(s,x;t,y)] det[p(t,y;u,z)] over unordered pairs y
    (half the square) and compares with det[p(s,x;u,z)].
    """
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    if xs.size != 2 or zs.size != 2:
        raise ValueError("determinant Chapman-Kolmogorov check is two-particle only")
    if not s < t < u:
        raise ValueError(f"need s < t < u, got {s}, {t}, {u}")
    _check_gaps(r, t - s, u - t)
    y, w = _ck_grid(bk, r, nodes)
    # P[a, i] = p(s, x_a; t, y_i);  Q[i, b] = p(t, y_i; u, z_b)
    P = np.stack([transition(bk, s, xa, t, y, r) for xa in xs])
    Q = np.stack([transition(bk, t, y, u, zb, r) for zb in zs], axis=1)
    det1 = P[0][:, None] * P[1][None, :] - P[0][None, :] * P[1][:, None]
    det2 = Q[:, 0][:, None] * Q[:, 1][None, :] - Q[:, 0][None, :] * Q[:, 1][:, None]
    lhs = 0.5 * float(np.einsum("i,j,ij,ij->", w, w, det1, det2))
    rhs = np.array([[transition(bk, s, xa, u, zb, r) for zb in zs] for xa in xs])
    return abs(lhs - float(np.linalg.det(rhs)))


# ---------------------------------------------------------------------------
# the weight matrices r(t)

@dataclass(frozen=True)
class RMatrix:
    """N x N weight matrix tying pinned-kernel rows to biorthogonal rows."""

    entries: np.ndarray
    tag: str


def r_matrix(spec, t):
    """Family-indexed matrix r(t); columns follow the pinned configuration.

    Columns whose pinned walker sits on a wall (v = 0 or pi r) carry half
    the generic prefactor.
    """
    if not t > 0.0:
        raise ValueError(f"need t > 0, got {t}")
    d = _derived(spec)
    tag, N, r = d.spec.tag, d.spec.N, d.spec.r
    size = d.size
    J = np.asarray(d.offsets)
    v = np.asarray(d.pinned)
    # e^{-pi i J^2 tau(t)} with tau(t) = i t / 2 pi r^2: real growth factor
    E = np.exp(J * J * t / (2.0 * r * r))
    pref4 = 4.0 * math.pi * r / size
    pref2 = 2.0 * math.pi * r / size
    arg = (size - 2.0 * J)[:, None] * v[None, :] / (2.0 * r)
    edge = (size - 2.0 * J) * math.pi / 2.0

    if tag == "A":
        ent = pref2 * E[:, None] * np.exp(-1j * arg)
    elif tag in ("B", "Bv"):
        ent = (pref4 * E[:, None] * np.sin(arg)).astype(complex)
        if tag == "B":
            ent[:, N - 1] = pref2 * E * np.sin(edge)
    elif tag in ("C", "BC", "Cv"):
        ent = (pref4 / 1j) * E[:, None] * np.sin(arg)
        if tag == "Cv":
            ent[:, N - 1] = (pref2 / 1j) * E * np.sin(edge)
    else:  # D
        ent = (pref4 * E[:, None] * np.cos(arg)).astype(complex)
        ent[:, 0] = pref2 * E
        ent[:, N - 1] = pref2 * E * np.cos(edge)
    return RMatrix(entries=ent, tag=tag)


# ---------------------------------------------------------------------------
# cross-module identities

def _points(xs):
    pts = getattr(xs, "points", xs)
    return np.asarray(pts, dtype=float)


def _pinned_matrix(d, t, xs):
    """P[j, k] = p(0, v_j; t, x_k) with the family's boundary kind."""
    bk = boundary_of(d)
    return np.stack([transition(bk, 0.0, vj, t, xs, d.spec.r) for vj in d.pinned])


def matrix_identity_residual(spec, t, xs):
    """max |r(t) . p(0, v; t, x) - M(x, t)| / max |M|, entrywise."""
    d = _derived(spec)
    xs = _points(xs)
    P = _pinned_matrix(d, t, xs)
    rm = r_matrix(d, t).entries
    M = np.stack([
        (lambda mp: mp[0] * np.exp(mp[1]))(m_fn_parts(d, j, xs, t))
        for j in range(1, d.spec.N + 1)
    ])
    return float(np.max(np.abs(rm @ P - M)) / np.max(np.abs(M)))


def bridge_density(spec, t, t_star, xs):
    """Pinned-bridge density det P_in . det P_out / det P_pin, by log-dets."""
    if not 0.0 < t < t_star:
        raise ValueError(f"need 0 < t < t_star, got t={t}, t_star={t_star}")
    d = _derived(spec)
    bk = boundary_of(d)
    xs = _points(xs)
    r = d.spec.r
    v = np.asarray(d.pinned)
    P1 = _pinned_matrix(d, t, xs)
    P2 = np.stack([transition(bk, t, xj, t_star, v, r) for xj in xs])
    D0 = np.stack([transition(bk, 0.0, vj, t_star, v, r) for vj in d.pinned])
    s1, l1 = np.linalg.slogdet(P1)
    s2, l2 = np.linalg.slogdet(P2)
    s0, l0 = np.linalg.slogdet(D0)
    if s0 == 0.0:
        raise AccuracyError("pinned-to-pinned determinant vanished")
    return float(s1 * s2 * s0 * np.exp(l1 + l2 - l0))


_B_PHASE = {"B": 1, "Bv": 1, "D": 1}


def _b_phase(tag, N):
    if tag == "A":
        e = N * (N + 1) // 2 if N % 2 == 0 else (N - 1) * (N - 2) // 2
    elif tag in ("C", "Cv", "BC"):
        e = N
    else:
        e = 0
    return (1j) ** (e % 4)


def macdonald_kmlgv_residual(spec, t, xs, cond_limit=1e12):
    """Weyl denominator against the pinned-path determinant route.

    Left side: W (times the parity-indexed coordinate-sum theta factor for
    the circle family).  Right side: phase . det r(t) / a(t) . det P.
    Returns the relative residual at the common log scale.
    """
    d = _derived(spec)
    tag, N, r = d.spec.tag, d.spec.N, d.spec.r
    xs = _points(xs)
    tau = 1j * t / (2.0 * math.pi * r * r)

    # left: Weyl-denominator route
    xi = xs / (2.0 * math.pi * r)
    wm, wsc = weyl_w_parts(tag, xi[None, :], d.size * tau)
    lm, lp = _logc_from_parts(complex(wm[0]), float(wsc[0]))
    if tag == "A":
        idx = 0 if N % 2 == 0 else 3
        pm, psc = theta_parts(idx, float(np.sum(xi)), N * tau)
        fm, fsc = complex(pm), float(psc)
        if fm == 0.0:
            lm, lp = -np.inf, 1.0
        else:
            lm = lm + math.log(abs(fm)) + fsc
            lp = lp * (fm / abs(fm))

    # right: r-matrix route
    rm = r_matrix(d, t).entries
    if np.linalg.cond(rm) > cond_limit:
        raise IllConditionedError(
            f"r-matrix condition number beyond {cond_limit:.1e}")
    sr, lr = np.linalg.slogdet(rm)
    P = _pinned_matrix(d, t, xs)
    sp, lpp = np.linalg.slogdet(P)
    la = coeff_a_log(d, t)
    if sr == 0.0 or sp == 0.0:
        rl, rp = -np.inf, 1.0
    else:
        rl = lr + lpp - la
        rp = _b_phase(tag, N) * sr * sp
    return _logc_rel_diff(lm, lp, rl, rp)


def eta_formula_residual(spec, t):
    """Circle-family closed form: the Weyl/KMLGV ratio b(t) equals
    (2 pi r)^N N^{-N/2} eta(N tau(t))^{(N-1)(N-2)/2}. Relative residual."""
    d = _derived(spec)
    if d.spec.tag != "A":
        raise ValueError("eta closed form applies to the circle family only")
    if not t > 0.0:
        raise ValueError(f"need t > 0, got {t}")
    N, r = d.spec.N, d.spec.r
    tau = 1j * t / (2.0 * math.pi * r * r)
    _, _, eta = eta_and_q(N * tau)
    lb = (N * math.log(2.0 * math.pi * r) - 0.5 * N * math.log(N)
          + 0.5 * (N - 1) * (N - 2) * math.log(abs(eta)))
    rm = r_matrix(d, t).entries
    sr, lr = np.linalg.slogdet(rm)
    la = coeff_a_log(d, t)
    lc = lr - la
    pc = _b_phase("A", N) * sr
    return _logc_rel_diff(lb, eta / abs(eta), lc, pc)
