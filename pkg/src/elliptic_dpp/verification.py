"""Named residual checks shared by the CLI verify verb and the test gate.

Each suite returns a list of CheckResult rows; a row renders as

    <name>: residual=<value> tol=<value> PASS|FAIL

so the CLI and the acceptance tests print identical evidence.
"""

import math
from dataclasses import dataclass

import numpy as np

from .biortho import BiorthoFamily, gram_converged, norm_const, norm_const_log
from .bridges import (BoundaryKind, boundary_of, bridge_density, ck_residual,
                      eta_formula_residual, macdonald_kmlgv_residual,
                      matrix_identity_residual, transition, transition_images)
from .dpp_kernels import KernelSpec, density, density_batch, kernel_matrix
from .macdonald import denominator_residual
from .root_systems import derive
from .theta_core import theta, theta_series

__all__ = ["CheckResult", "SUITES", "run_suites", "render"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self):
        return math.isfinite(self.residual) and self.residual <= self.tol

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: residual={self.residual:.3e} tol={self.tol:.1e} {status}"


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _config(rng, d):
    # margins keep configurations off the walls, the gap floor keeps the
    # determinant identities well conditioned
    L = d.length
    while True:
        xs = np.sort(rng.uniform(0.03 * L, 0.97 * L, d.spec.N))
        if d.spec.N == 1 or np.min(np.diff(xs)) > 0.01 * L:
            return xs


# ---------------------------------------------------------------------------
# suites

def theta_suite(d, t, t_star):
    pts = [(0.31 + 0.12j, 0.8j), (-0.7 + 0.4j, 0.3j), (1.9 - 0.2j, 1.7j),
           (0.45, 0.09j), (2.2 + 1.1j, 2.5j)]
    worst = 0.0
    for v, tau in pts:
        for idx in range(4):
            worst = max(worst, _rel(theta(idx, v, tau), theta_series(idx, v, tau)))
    out = [CheckResult("theta engine vs series oracle", worst, 1e-12)]

    worst = 0.0
    signs = {0: lambda m, k: (-1.0) ** m, 1: lambda m, k: (-1.0) ** (m + k),
             2: lambda m, k: (-1.0) ** k, 3: lambda m, k: 1.0}
    for idx in range(4):
        for (m, k) in ((1, 0), (0, 1), (2, 1), (-1, 2)):
            for v, tau in ((0.23 + 0.05j, 0.7j), (-0.4, 1.3j)):
                lhs = theta(idx, v + m * tau + k, tau)
                pref = signs[idx](m, k) * np.exp(
                    -1j * np.pi * tau * m * m - 2j * np.pi * m * v)
                rhs = pref * theta(idx, v, tau)
                worst = max(worst, abs(lhs - rhs)
                            / max(abs(lhs), abs(rhs), abs(pref)))
    out.append(CheckResult("theta quasi-periodicity", worst, 1e-12))

    worst = 0.0
    for idx, swap in ((0, 2), (1, 1), (2, 0), (3, 3)):
        eps = np.exp(0.75j * np.pi) if idx == 1 else np.exp(0.25j * np.pi)
        for tau in (0.1j, 0.5j, 2j):
            for v in (0.3 + 0.17j, -0.8 + 0.05j):
                lhs = theta(idx, v, tau)
                rhs = eps * tau ** -0.5 * np.exp(-1j * np.pi * v * v / tau) \
                    * theta(swap, v / tau, -1.0 / tau)
                worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-12))
    out.append(CheckResult("theta imaginary transform", worst, 1e-12))
    return out


def biortho_suite(d, t, t_star):
    fam = BiorthoFamily(d.spec, t_star)
    res = gram_converged(fam, t)
    g = res.matrix
    norms = np.array([norm_const(d, j, t_star) for j in range(1, d.spec.N + 1)])
    # entry (j,k) lives on the scale sqrt(m_j m_k); the norms span many
    # orders of magnitude, so a global normalization would be meaningless
    rel = np.abs(g - np.diag(norms)) / np.sqrt(np.outer(norms, norms))
    off = rel - np.diag(np.diag(rel))
    worst_off = float(off.max()) if d.spec.N > 1 else 0.0
    worst_diag = float(np.max(np.diag(rel)))
    return [
        CheckResult("biorthogonality off-diagonal", worst_off, 1e-9),
        CheckResult("biorthogonality norms", worst_diag, 1e-9),
    ]


def denominator_suite(d, t, t_star):
    rng = np.random.default_rng(101)
    worst = 0.0
    for tt in (t, 0.5 * t_star, t_star):
        for _ in range(5):
            xs = _config(rng, d)
            worst = max(worst, denominator_residual(d, xs, tt))
    return [CheckResult("determinant-identity residual", worst, 1e-10)]


def matrix_suite(d, t, t_star):
    rng = np.random.default_rng(103)
    worst = 0.0
    for tt in (t, t_star):
        for _ in range(5):
            xs = _config(rng, d)
            worst = max(worst, matrix_identity_residual(d, tt, xs))
    out = [CheckResult("weight-matrix identity", worst, 1e-10)]

    rng = np.random.default_rng(107)
    worst = 0.0
    for _ in range(5):
        xs = _config(rng, d)
        worst = max(worst, macdonald_kmlgv_residual(d, t, xs))
    out.append(CheckResult("pinned-path proportionality", worst, 1e-9))
    if d.spec.tag == "A":
        out.append(CheckResult("eta closed form", eta_formula_residual(d, t), 1e-10))
    return out


def bridge_suite(d, t, t_star):
    bk = boundary_of(d)
    L = 2 * np.pi * d.spec.r if bk.tag == "circ" else np.pi * d.spec.r
    worst = 0.0
    for dts in (0.1, 1.0):
        for x, y in ((0.2 * L, 0.7 * L), (0.8 * L, 0.4 * L)):
            a = transition(bk, 0.0, x, dts * d.spec.r ** 2, y, d.spec.r)
            b = transition_images(bk, 0.0, x, dts * d.spec.r ** 2, y, d.spec.r, 12)
            worst = max(worst, abs(a - b))
    out = [CheckResult("transition vs winding images", worst, 1e-11)]

    out.append(CheckResult(
        "Chapman-Kolmogorov",
        ck_residual(bk, 0.0, 0.4 * t_star, t_star, 0.3 * L, 0.7 * L, d.spec.r),
        1e-10))

    rng = np.random.default_rng(109)
    ks = KernelSpec(d, t=t, t_star=t_star)
    worst = 0.0
    for _ in range(5):
        xs = _config(rng, d)
        worst = max(worst, _rel(bridge_density(d, t, t_star, xs), density(ks, xs)))
    out.append(CheckResult("bridge density vs spectral density", worst, 1e-8))
    return out


def kernel_suite(d, t, t_star):
    ks = KernelSpec(d, t=t, t_star=t_star)
    L = d.length
    n = 512
    x = np.arange(n) * (L / n) + L / (2 * n)
    km = kernel_matrix(ks, x, x)
    trace = float(np.sum(np.diag(km)).real) * (L / n)
    comp_err = float(np.max(np.abs(km @ km * (L / n) - km)) / np.max(np.abs(km)))
    rng = np.random.default_rng(113)
    dens = density_batch(ks, np.sort(
        rng.uniform(0.0, 1.0, (200, d.spec.N)), axis=1) * L)
    return [
        CheckResult("kernel trace = N", abs(trace - d.spec.N), 1e-9),
        CheckResult("reproducing identity", comp_err, 1e-9),
        CheckResult("density nonnegativity", max(0.0, -float(dens.min())), 1e-12),
    ]


SUITES = {
    "theta": theta_suite,
    "biortho": biortho_suite,
    "denominator": denominator_suite,
    "matrix": matrix_suite,
    "bridge": bridge_suite,
    "kernel": kernel_suite,
}


def run_suites(names, spec, t, t_star):
    """Run the named suites (or all of them) for one family; ordered results."""
    if names in ("all", ["all"]):
        names = list(SUITES)
    if isinstance(names, str):
        names = [names]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; pick from {list(SUITES)}")
    d = derive(spec)
    out = []
    for n in names:
        out.extend(SUITES[n](d, t, t_star))
    return out


def render(results):
    return "\n".join(r.line() for r in results)
