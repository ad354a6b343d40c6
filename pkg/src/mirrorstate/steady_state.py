"""Classical steady state of the cavity field, the beam and the mirror.

The beam profile contains ``exp(beta*sigma)`` with ``beta*l ~ 1.5e3``,
far beyond double-precision range.  Every expression below is therefore
written in terms of ``y = exp(-2 beta l)`` and ``exp(beta (sigma - 2 l))``,
which never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PhysicalParams, derive_constants


@dataclass(frozen=True)
class SteadyState:
    """Steady-state solution at one detuning.

    ``A``, ``B``, ``C``, ``D`` are the coefficients of
    ``X(s) = A e^{beta s} + B e^{-beta s} + C s + D``.  ``A`` is tiny and may
    underflow to zero; ``A_scaled = A e^{2 beta l}`` keeps it exactly.
    """

    delta: float
    photon_number: float
    A: float
    A_scaled: float
    B: float
    C: float
    D: float
    beta: float
    qbar: float
    qbar_approx: float
    phibar: float
    theta: float

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.photon_number)


def photon_number(p: PhysicalParams, delta: float, model: str | None = None) -> float:
    """Intracavity photon number ``n_c`` at normalized detuning ``delta``.

    Parameters
    ----------
    p : PhysicalParams
    delta : float
        Normalized detuning, ``delta = -Delta/(2 kappa)``.
    model : {"exact", "scaled"}, optional
        ``"exact"`` gives ``E^2/(kappa^2+Delta^2)``; ``"scaled"`` gives the
        variant ``E^2/(kappa^2 (1+delta^2))``.  Defaults to
        ``p.photon_number_model``.
    """
    model = model or p.photon_number_model
    dc = derive_constants(p, delta)
    k2 = p.optical_decay**2
    if model == "exact":
        return dc.drive_sq / (k2 + dc.detuning**2)
    if model == "scaled":
        return dc.drive_sq / (k2 * (1.0 + delta**2))
    raise ValueError(f"unknown photon-number model {model!r}")


def _coefficients(p: PhysicalParams, n_c: float):
    T = p.mirror_mass * p.gravity
    beta = math.sqrt(T / p.flexural_rigidity)
    ell, h = p.beam_length, p.offset
    c = p.hbar * p.coupling * n_c / T  # slope C'
    y = math.exp(-2 * beta * ell)
    den = (1 + h * beta) + (1 - h * beta) * y
    A_scaled = -(c / beta) * (1 - h * beta) / den  # A' e^{2 beta l}
    A = A_scaled * y
    B = (c / beta) * (1 + h * beta) / den
    D = -(A + B)
    return T, beta, c, A, A_scaled, B, D


def steady_state(p: PhysicalParams, delta: float) -> SteadyState:
    """Full steady state: beam coefficients, mirror offset, rotation, phase."""
    n_c = photon_number(p, delta)
    T, beta, c, A, A_scaled, B, D = _coefficients(p, n_c)
    ell, h = p.beam_length, p.offset
    e_l = math.exp(-beta * ell)
    # A e^{beta l} = A_scaled e^{-beta l}
    x_l = A_scaled * e_l + B * e_l + c * ell + D
    phibar = beta * A_scaled * e_l - beta * B * e_l + c
    qbar = x_l + h * phibar
    Delta = -2 * p.optical_decay * delta
    theta = math.atan2(Delta, p.optical_decay)
    return SteadyState(
        delta=delta,
        photon_number=n_c,
        A=A,
        A_scaled=A_scaled,
        B=B,
        C=c,
        D=D,
        beta=beta,
        qbar=qbar,
        qbar_approx=p.hbar * p.coupling * (ell + h) * n_c / T,
        phibar=phibar,
        theta=theta,
    )


def beam_profile(p: PhysicalParams, delta: float, sigma):
    """Beam displacement ``X(sigma)``, exact and thin-beam approximation.

    Parameters
    ----------
    p : PhysicalParams
    delta : float
    sigma : float or array_like
        Positions along the beam, ``0 <= sigma <= l`` (cm).

    Returns
    -------
    exact, approx : ndarray
        Exact closed form and its ``beta*l >> 1`` limit ``(hbar G0 n_c/T) sigma``.
    state : SteadyState
    """
    s = np.asarray(sigma, dtype=float)
    ell = p.beam_length
    if np.any(s < 0) or np.any(s > ell):
        raise ValueError(f"sigma must lie in [0, {ell}]")
    st = steady_state(p, delta)
    beta = st.beta
    exact = (
        st.A_scaled * np.exp(beta * (s - 2 * ell))
        + st.B * np.exp(-beta * s)
        + st.C * s
        + st.D
    )
    return exact, st.C * s, st


def mirror_offset(p: PhysicalParams, delta: float):
    """Mirror centre-of-mass offset ``qbar`` (exact, approximate).

    The exact value is the closed form written with ``y = exp(-2 beta l)``;
    the approximation is ``(hbar G0/T)(l+h) n_c``.
    """
    n_c = photon_number(p, delta)
    T = p.mirror_mass * p.gravity
    beta = math.sqrt(T / p.flexural_rigidity)
    ell, h = p.beam_length, p.offset
    c = p.hbar * p.coupling * n_c / T
    y = math.exp(-2 * beta * ell)
    den = (1 + h * beta) + (1 - h * beta) * y
    bracket = (1 - h * beta) * (1 + (h + ell) * beta) * y - (1 + h * beta) * (
        1 - beta * (h + ell)
    )
    exact = (c / beta) * bracket / den
    return exact, c * (ell + h)


def boundary_residuals(p: PhysicalParams, delta: float) -> dict:
    """Relative residuals of the four steady-state conditions.

    Checks ``X(0) = 0``, ``X'(0) = 0``, the force balance on the mirror and
    the torque balance, plus ``qbar = X(l) + h Phi``, each scaled by a
    natural magnitude of the corresponding equation.
    """
    st = steady_state(p, delta)
    beta, ell, h = st.beta, p.beam_length, p.offset
    EI = p.flexural_rigidity
    T = p.mirror_mass * p.gravity
    e_l = math.exp(-beta * ell)
    a_l = st.A_scaled * e_l  # A e^{beta l}
    b_l = st.B * e_l  # B e^{-beta l}
    x0 = st.A + st.B + st.D
    dx0 = beta * (st.A - st.B) + st.C
    d2 = beta**2 * (a_l + b_l)
    d3 = beta**3 * (a_l - b_l)
    force = -T * st.phibar + EI * d3 + p.hbar * p.coupling * st.photon_number
    # torque balance multiplied by e^{beta l} so it does not underflow
    torque = beta**2 * (st.A_scaled + st.B) + h * beta**3 * (st.A_scaled - st.B)
    q_direct, _ = mirror_offset(p, delta)
    scale = max(abs(st.B), abs(st.C * ell), 1e-300)
    return {
        "X0": abs(x0) / scale,
        "dX0": abs(dx0) / max(abs(st.C), 1e-300),
        "force": abs(force) / max(p.hbar * p.coupling * st.photon_number, 1e-300),
        "torque": abs(torque) / max(h * beta**3 * abs(st.B), 1e-300),
        "qbar": abs(st.qbar - q_direct) / max(abs(q_direct), 1e-300),
    }
