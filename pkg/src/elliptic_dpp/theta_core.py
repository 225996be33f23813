"""Jacobi theta functions on the upper half-plane.

Four families, indexed 0..3, of the classical one-variable theta series in the
(v, tau) convention with z = e^{i pi v}, q = e^{i pi tau}, Im tau > 0:

    theta_0(v|tau) = sum_n (-1)^n q^{n^2} z^{2n}
    theta_1(v|tau) = i sum_n (-1)^n q^{(n-1/2)^2} z^{2n-1}
    theta_2(v|tau) = sum_n q^{(n-1/2)^2} z^{2n-1}
    theta_3(v|tau) = sum_n q^{n^2} z^{2n}

(sums over all integers n; theta_0 is often written theta_4 elsewhere).

The production evaluator `theta` / `theta_parts` combines three exact steps so
the raw series is only ever summed with a small nome and a reduced argument:

1. a fundamental-domain walk in tau (integer shifts tau -> tau - n and
   inversions tau -> -1/tau, each with its classical index swap and phase),
   which leaves Im tau >= sqrt(3)/2 for any input with Im tau > 0;
2. quasi-periodic reduction v -> v - m*tau - k with the exact exponential
   prefactor, leaving |Re v| <= 1/2 and |Im v| <= Im tau / 2;
3. a ring-ordered series with a per-element peak exponent factored out.

Because the prefactors from steps 1-2 routinely overflow double precision in
downstream determinant work, `theta_parts` returns the value in
(mantissa, log_scale) form with value = mantissa * exp(log_scale), mantissa
of order unity.  `theta` exponentiates on the spot.

`theta_series` is an independent reference implementation (the plain defining
sum, no reduction, no transforms) used as an oracle in the test-suite; it is
only accurate for moderate arguments and deliberately shares no code with the
production path.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "AccuracyError",
    "eta_and_q",
    "theta",
    "theta_parts",
    "theta_series",
]

# stop when a ring's magnitude is below _STOP x accumulated magnitude,
# twice in a row
_STOP = 1e-17
_MAX_RINGS = 64
_ORACLE_MAX_RINGS = 512

# tau -> -1/tau: index swap and eighth-root-of-unity prefactor
_INV_SWAP = {0: 2, 1: 1, 2: 0, 3: 3}
_INV_EPS = {
    0: np.exp(0.25j * np.pi),
    1: np.exp(0.75j * np.pi),
    2: np.exp(0.25j * np.pi),
    3: np.exp(0.25j * np.pi),
}


class AccuracyError(ArithmeticError):
    """A series, quadrature, or truncation failed to reach its target."""


def _check_index(index):
    if index not in (0, 1, 2, 3):
        raise ValueError(f"theta index must be 0, 1, 2 or 3, got {index!r}")


def _check_tau(tau):
    tau = complex(tau)
    if not (np.isfinite(tau.real) and np.isfinite(tau.imag)):
        raise ValueError("tau must be finite")
    if tau.imag <= 0.0:
        raise ValueError(f"tau must have positive imaginary part, got {tau}")
    return tau


def _ring_sum(index, w, tau, cap):
    """Sum the defining series at reduced argument w, |Re w|<=1/2, |Im w|<=Im tau/2.

    Returns (ssum, peak) with the series equal to ssum * exp(peak); peak is the
    real exponent of the largest term, factored out so ssum stays of order one
    even when Im tau is huge and the half-integer families' leading terms are
    e^{+pi Im tau / 4}-large.
    """
    qf = 1j * np.pi * tau
    zf = 2j * np.pi * w
    shape = w.shape
    if index in (0, 3):
        peak = np.zeros(shape)  # n = 0 term dominates after reduction
        total = np.ones(shape, dtype=complex)
        mag = np.ones(shape)
        offset = 0.0
    else:
        # dominant half-integer exponent: a = +-1/2, whichever sign matches Im w
        peak = -0.25 * np.pi * tau.imag + np.pi * np.abs(w.imag)
        total = np.zeros(shape, dtype=complex)
        mag = np.zeros(shape)
        offset = 0.5
    conv = np.zeros(shape, dtype=np.int64)
    for n in range(1, cap + 1):
        a = n - offset
        up = np.exp(qf * (a * a) + zf * a - peak)
        dn = np.exp(qf * (a * a) - zf * a - peak)
        if index == 3:
            ring = up + dn
        elif index == 0:
            ring = (up + dn) if n % 2 == 0 else -(up + dn)
        elif index == 2:
            ring = up + dn
        else:  # index == 1
            ring = (1j if n % 2 == 0 else -1j) * (up - dn)
        active = conv < 2
        rmag = np.abs(ring)
        total = np.where(active, total + ring, total)
        mag = np.where(active, mag + rmag, mag)
        hit = rmag <= _STOP * mag
        conv = np.where(active, np.where(hit, conv + 1, 0), conv)
        if int(conv.min()) >= 2:
            return total, peak
    raise AccuracyError(
        f"theta series did not converge within {cap} rings (Im tau = {tau.imag:g})"
    )


def theta_parts(index, v, tau):
    """Evaluate theta_index(v | tau) as (mantissa, log_scale).

    Parameters
    ----------
    index : int
        Family index, 0..3.
    v : complex or array_like of complex
        Argument(s).  Vectorized; tau is a scalar.
    tau : complex
        Half-period ratio, Im tau > 0.

    Returns
    -------
    mantissa : complex ndarray (or scalar)
        Order-unity complex factor.
    log_scale : float ndarray (or scalar)
        Real exponent; the function value is ``mantissa * exp(log_scale)``.

    Notes
    -----
    The split exists because quasi-periodic prefactors grow like
    e^{pi Im(tau) m^2}: determinants and kernel sums downstream consume the
    two parts separately and only ever exponentiate differences of scales.
    """
    _check_index(index)
    tau_c = _check_tau(tau)
    w = np.array(v, dtype=complex, copy=True)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    mant = np.ones(w.shape, dtype=complex)
    scale = np.zeros(w.shape)
    idx = index

    # Fundamental-domain walk: shift Re tau into [-1/2, 1/2], invert while
    # |tau| < 1.  For purely imaginary tau this is the familiar single
    # imaginary transformation applied exactly when Im tau < 1.
    for _ in range(64):
        nsh = int(round(tau_c.real))
        if nsh:
            tau_c = complex(tau_c.real - nsh, tau_c.imag)
            if idx in (1, 2):
                mant *= np.exp(0.25j * np.pi * nsh)
            elif nsh % 2:
                idx = 3 - idx  # 0 <-> 3 under odd shifts
        if abs(tau_c) >= 1.0:
            break
        # integer shift of the argument first, to keep v^2/tau well-conditioned
        k0 = np.round(w.real)
        if idx in (1, 2):
            mant = np.where(k0 % 2.0 == 0.0, mant, -mant)
        w = w - k0
        pref = (-1j * np.pi / tau_c) * w * w
        scale += pref.real
        mant *= np.exp(1j * pref.imag)
        mant *= _INV_EPS[idx] * np.exp(-0.5 * np.log(tau_c))
        idx = _INV_SWAP[idx]
        w = w / tau_c
        tau_c = -1.0 / tau_c
    else:  # pragma: no cover - needs adversarial tau to trigger
        raise AccuracyError(f"modular reduction did not terminate for tau = {tau}")

    # quasi-periodic reduction to |Re w| <= 1/2, |Im w| <= Im tau / 2
    m = np.round(w.imag / tau_c.imag)
    w = w - m * tau_c
    k = np.round(w.real)
    w = w - k
    if idx == 1:
        flip = (m + k) % 2.0 != 0.0
    elif idx == 2:
        flip = k % 2.0 != 0.0
    elif idx == 0:
        flip = m % 2.0 != 0.0
    else:
        flip = np.zeros(w.shape, dtype=bool)
    pref = -1j * np.pi * tau_c * (m * m) - 2j * np.pi * m * w
    scale += pref.real
    mant *= np.exp(1j * pref.imag)
    mant = np.where(flip, -mant, mant)

    ssum, peak = _ring_sum(idx, w, tau_c, _MAX_RINGS)
    mant = mant * ssum
    scale = scale + peak
    if scalar:
        return complex(mant[0]), float(scale[0])
    return mant, scale


def theta(index, v, tau):
    """theta_index(v | tau), exponentiated.  See `theta_parts` for the split form.

    Overflows to inf for arguments whose quasi-periodic prefactor exceeds
    double range; use `theta_parts` there.
    """
    mant, scale = theta_parts(index, v, tau)
    with np.errstate(over="ignore"):
        return mant * np.exp(scale)


def theta_series(index, v, tau, cap=_ORACLE_MAX_RINGS):
    """Defining series summed term by term -- reference oracle.

    No argument reduction and no modular transforms: this is the textbook sum,
    ring-ordered (n and -n together), stopping once a ring is below 1e-17 of
    the accumulated magnitude twice in a row.  Intended for moderate
    arguments (Im tau >= ~0.05, |Im v| a few units); raises AccuracyError when
    the plain sum cannot converge in `cap` rings.
    """
    _check_index(index)
    tau = _check_tau(tau)
    w = np.array(v, dtype=complex, copy=True)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    qf = 1j * np.pi * tau
    zf = 2j * np.pi * w
    if index in (0, 3):
        total = np.ones(w.shape, dtype=complex)
        mag = np.ones(w.shape)
        offset = 0.0
    else:
        total = np.zeros(w.shape, dtype=complex)
        mag = np.zeros(w.shape)
        offset = 0.5
    conv = np.zeros(w.shape, dtype=np.int64)
    for n in range(1, cap + 1):
        a = n - offset
        up = np.exp(qf * (a * a) + zf * a)
        dn = np.exp(qf * (a * a) - zf * a)
        if index == 3:
            ring = up + dn
        elif index == 0:
            ring = (-1.0) ** n * (up + dn)
        elif index == 2:
            ring = up + dn
        else:
            ring = 1j * (-1.0) ** n * (up - dn)
        active = conv < 2
        rmag = np.abs(ring)
        total = np.where(active, total + ring, total)
        mag = np.where(active, mag + rmag, mag)
        conv = np.where(active, np.where(rmag <= _STOP * mag, conv + 1, 0), conv)
        if int(conv.min()) >= 2:
            break
    else:
        raise AccuracyError(f"plain theta series did not converge in {cap} rings")
    if scalar:
        return complex(total[0])
    return total


def eta_and_q(tau):
    """Nome, Euler product, and the Dedekind eta function at tau.

    Returns
    -------
    (q, q0, eta) : tuple of complex
        q = e^{i pi tau}, q0 = prod_{n>=1} (1 - q^{2n}),
        eta = q^{1/12} * q0 = e^{i pi tau / 12} * q0.
    """
    tau = _check_tau(tau)
    q = complex(np.exp(1j * np.pi * tau))
    q2 = q * q
    q0 = 1.0 + 0.0j
    p = 1.0 + 0.0j
    for _ in range(200_000):
        p *= q2
        q0 *= 1.0 - p
        if abs(p) < 1e-18:
            break
    else:
        raise AccuracyError(f"Euler product did not converge for tau = {tau}")
    eta = complex(np.exp(1j * np.pi * tau / 12.0)) * q0
    return q, q0, eta
