"""Boundary kernels, winding-image oracles, and pinned-path identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elliptic_dpp.bridges import (
    BoundaryKind,
    boundary_of,
    bridge_density,
    ck_det_residual,
    ck_residual,
    eta_formula_residual,
    macdonald_kmlgv_residual,
    matrix_identity_residual,
    r_matrix,
    transition,
    transition_images,
)
from elliptic_dpp.dpp_kernels import KernelSpec, density
from elliptic_dpp.root_systems import FAMILIES, derive
from elliptic_dpp.theta_core import AccuracyError

R = 1.0
KINDS = (BoundaryKind("circ", "even"), BoundaryKind("circ", "odd"),
         BoundaryKind("ar"), BoundaryKind("aa"), BoundaryKind("rr"))


def _kind_length(bk, r=R):
    return 2 * np.pi * r if bk.tag == "circ" else np.pi * r


def _random_config(rng, d, margin=0.02):
    pts = np.sort(rng.uniform(margin, 1.0 - margin, size=d.spec.N)) * d.length
    return pts


# ---------------------------------------------------------------------------
# boundary kinds

def test_boundary_kind_validation():
    with pytest.raises(ValueError):
        BoundaryKind("periodic")
    with pytest.raises(ValueError):
        BoundaryKind("circ")            # parity required
    with pytest.raises(ValueError):
        BoundaryKind("rr", "even")      # parity forbidden
    assert BoundaryKind("circ", "odd").parity == "odd"


def test_boundary_of_mapping():
    assert boundary_of(("A", 4, 1.0)) == BoundaryKind("circ", "even")
    assert boundary_of(("A", 3, 1.0)) == BoundaryKind("circ", "odd")
    assert boundary_of(("B", 3, 1.0)).tag == "ar"
    assert boundary_of(("Cv", 3, 1.0)).tag == "ar"
    assert boundary_of(("BC", 3, 1.0)).tag == "ar"
    assert boundary_of(("Bv", 3, 1.0)).tag == "aa"
    assert boundary_of(("C", 3, 1.0)).tag == "aa"
    assert boundary_of(("D", 3, 1.0)).tag == "rr"


# ---------------------------------------------------------------------------
# transition kernels

def test_transition_rejects_bad_times():
    with pytest.raises(ValueError):
        transition(BoundaryKind("rr"), 0.5, 0.1, 0.5, 0.2, R)
    with pytest.raises(ValueError):
        transition(BoundaryKind("rr"), 0.7, 0.1, 0.5, 0.2, R)


def test_reflecting_kernel_conserves_mass():
    bk = BoundaryKind("rr")
    L = _kind_length(bk)
    y = np.linspace(0.0, L, 513)
    w = np.full(513, L / 512)
    w[0] = w[-1] = 0.5 * L / 512
    mass = np.sum(w * transition(bk, 0.0, 0.7, 0.8, y, R))
    assert abs(mass - 1.0) < 1e-10


def test_circle_odd_kernel_conserves_mass():
    bk = BoundaryKind("circ", "odd")
    L = _kind_length(bk)
    y = np.arange(512) * L / 512
    mass = np.sum(transition(bk, 0.0, 1.1, 0.6, y, R)) * L / 512
    assert abs(mass - 1.0) < 1e-10


def test_absorbing_walls_kill_kernel():
    assert transition(BoundaryKind("aa"), 0.0, 1.0, 0.5, 0.0, R) == 0.0
    assert abs(transition(BoundaryKind("aa"), 0.0, 1.0, 0.5, np.pi * R, R)) < 1e-15
    assert transition(BoundaryKind("ar"), 0.0, 1.0, 0.5, 0.0, R) == 0.0
    # the ar kernel reflects at pi r, so mass survives there
    assert transition(BoundaryKind("ar"), 0.0, 1.0, 0.5, np.pi * R, R) > 0.0


def test_circle_even_kernel_is_signed():
    # nearest winding image carries weight (-1): negative for |x-y| > pi r
    bk = BoundaryKind("circ", "even")
    assert transition(bk, 0.0, 0.0, 0.05, 0.9 * 2 * np.pi * R, R) < 0.0


@pytest.mark.parametrize("bk", KINDS, ids=lambda b: b.tag + (b.parity or ""))
def test_transition_matches_image_oracle(bk):
    L = _kind_length(bk)
    worst = 0.0
    for dt_scale in (0.1, 1.0, 5.0):
        for x, y in [(0.1 * L, 0.8 * L), (0.45 * L, 0.5 * L), (0.9 * L, 0.2 * L)]:
            a = transition(bk, 0.0, x, dt_scale * R * R, y, R)
            b = transition_images(bk, 0.0, x, dt_scale * R * R, y, R, windings=12)
            worst = max(worst, abs(a - b))
    assert worst < 1e-11, f"{bk}: theta vs images {worst:.3e}"


def test_transition_images_tail_guard():
    # one winding cannot cover a very diffuse kernel
    with pytest.raises(AccuracyError):
        transition_images(BoundaryKind("rr"), 0.0, 0.3, 50.0, 1.0, R, windings=1)
    with pytest.raises(ValueError):
        transition_images(BoundaryKind("rr"), 0.0, 0.3, 0.5, 1.0, R, windings=0)


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(0.05, 4.0))
@settings(max_examples=40, deadline=None)
def test_time_reversal_symmetry(x, y, dt):
    # p(0, x; dt, y) = p(u - dt, y; u, x)
    for bk in (BoundaryKind("rr"), BoundaryKind("circ", "even")):
        a = transition(bk, 0.0, x, dt, y, R)
        b = transition(bk, 5.0 - dt, y, 5.0, x, R)
        assert abs(a - b) <= 1e-13 * max(1.0, abs(a))


# ---------------------------------------------------------------------------
# Chapman-Kolmogorov

@pytest.mark.parametrize("bk", KINDS, ids=lambda b: b.tag + (b.parity or ""))
def test_chapman_kolmogorov(bk):
    L = _kind_length(bk)
    res = ck_residual(bk, 0.0, 0.3, 0.9, 0.31 * L, 0.77 * L, R)
    assert res < 1e-10, f"{bk}: CK residual {res:.3e}"


def test_chapman_kolmogorov_determinant_version():
    res = ck_det_residual(BoundaryKind("aa"), 0.0, 0.4, 1.1, [0.8, 2.1], [0.5, 2.6], R)
    assert res < 1e-8
    res = ck_det_residual(BoundaryKind("circ", "even"), 0.0, 0.4, 1.1,
                          [0.8, 3.1], [0.5, 4.6], R)
    assert res < 1e-8


def test_ck_refuses_degenerate_gaps():
    bk = BoundaryKind("rr")
    with pytest.raises(ValueError):
        ck_residual(bk, 0.0, 5e-7, 1.0, 0.3, 0.7, R)
    with pytest.raises(ValueError):
        ck_residual(bk, 0.0, 0.9, 0.3, 0.3, 0.7, R)   # bad ordering


# ---------------------------------------------------------------------------
# weight matrices

def test_r_matrix_rejects_bad_t():
    with pytest.raises(ValueError):
        r_matrix(("A", 3, 1.0), 0.0)


def test_r_matrix_entries_match_stated_forms():
    t = 0.7
    d = derive(("D", 4, 1.0))
    rm = r_matrix(d, t).entries
    J = np.asarray(d.offsets)
    expect = (2 * np.pi * R / d.size) * np.exp(J * J * t / (2 * R * R))
    assert np.allclose(rm[:, 0], expect, rtol=1e-14)
    # C-type entries are purely imaginary (real sine over i)
    rmc = r_matrix(("C", 3, 1.0), t).entries
    assert np.max(np.abs(rmc.real)) < 1e-12 * np.max(np.abs(rmc.imag))
    # B-type last column carries half the generic prefactor
    dB = derive(("B", 3, 1.0))
    rmb = r_matrix(dB, t).entries
    JB = np.asarray(dB.offsets)
    generic = (4 * np.pi * R / dB.size) * np.exp(JB ** 2 * t / (2 * R * R)) \
        * np.sin((dB.size - 2 * JB) * np.pi / 2)
    assert np.allclose(rmb[:, -1], 0.5 * generic, rtol=1e-14)


@given(st.floats(0.05, 2.0))
@settings(max_examples=30, deadline=None)
def test_r_matrix_entries_finite(t):
    for tag in FAMILIES:
        ent = r_matrix((tag, 8, 1.0), t).entries
        assert np.all(np.isfinite(ent.view(float)))


# ---------------------------------------------------------------------------
# matrix identity r(t) . P = M

@pytest.mark.parametrize("tag", FAMILIES)
def test_matrix_identity(tag):
    rng = np.random.default_rng(17)
    worst = 0.0
    for N in (2, 3, 4, 6):
        d = derive((tag, N, 1.0))
        for t in (0.2, 0.7, 1.5):
            xs = _random_config(rng, d)
            worst = max(worst, matrix_identity_residual(d, t, xs))
    assert worst < 1e-10, f"{tag}: worst residual {worst:.3e}"


def test_matrix_identity_sharp_kernels():
    rng = np.random.default_rng(5)
    for tag in ("A", "C", "D"):
        d = derive((tag, 4, 1.0))
        res = matrix_identity_residual(d, 0.05, _random_config(rng, d))
        assert res < 1e-8, f"{tag}: sharp residual {res:.3e}"


# ---------------------------------------------------------------------------
# bridge representation of the density

@pytest.mark.parametrize("tag", FAMILIES)
def test_bridge_density_equals_spectral_density(tag):
    rng = np.random.default_rng(23)
    worst = 0.0
    for N in (2, 3, 4):
        d = derive((tag, N, 1.0))
        ks = KernelSpec(d, t=0.4, t_star=1.0)
        for _ in range(3):
            xs = _random_config(rng, d)
            a = bridge_density(d, 0.4, 1.0, xs)
            b = density(ks, xs)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    assert worst < 1e-8, f"{tag}: worst rel deviation {worst:.3e}"


def test_bridge_density_normalizes():
    d = derive(("C", 2, 1.0))
    u, gw = np.polynomial.legendre.leggauss(32)
    x = 0.5 * d.length * (u + 1.0)
    w = 0.5 * d.length * gw
    total = 0.0
    for i in range(32):
        for j in range(32):
            total += w[i] * w[j] * bridge_density(d, 0.4, 1.0, np.sort([x[i], x[j]]))
    assert abs(0.5 * total - 1.0) < 1e-8


def test_bridge_density_time_reversal():
    # pinned at the same configuration both ends: t and t* - t interchangeable
    d = derive(("A", 3, 1.0))
    xs = np.array([0.9, 2.8, 4.4])
    assert abs(bridge_density(d, 0.3, 1.0, xs) - bridge_density(d, 0.7, 1.0, xs)) < 1e-12


def test_bridge_density_validates_times():
    with pytest.raises(ValueError):
        bridge_density(("A", 2, 1.0), 1.0, 1.0, [0.3, 0.9])


# ---------------------------------------------------------------------------
# Weyl denominator vs pinned-path determinant

@pytest.mark.parametrize("tag", FAMILIES)
def test_kmlgv_proportionality(tag):
    rng = np.random.default_rng(31)
    worst = 0.0
    for N in (1, 2, 3, 5):
        if tag == "D" and N < 2:
            continue
        d = derive((tag, N, 1.0))
        for t in (0.3, 1.0):
            xs = _random_config(rng, d)
            worst = max(worst, macdonald_kmlgv_residual(d, t, xs))
    assert worst < 1e-9, f"{tag}: worst residual {worst:.3e}"


def test_kmlgv_scalar_case():
    rng = np.random.default_rng(7)
    for tag in ("A", "B", "C"):
        d = derive((tag, 1, 1.0))
        res = macdonald_kmlgv_residual(d, 0.6, _random_config(rng, d))
        assert res < 1e-12, f"{tag}: N=1 residual {res:.3e}"


def test_eta_closed_form():
    for N in range(1, 7):
        res = eta_formula_residual(("A", N, 1.0), 0.8)
        assert res < 1e-10, f"A_{N}: eta-form residual {res:.3e}"
    with pytest.raises(ValueError):
        eta_formula_residual(("B", 3, 1.0), 0.8)
