"""Pendulum/rotation coupling coefficients, normal modes and structural damping.

The exact coefficients contain ``cosh(k_e l)`` and ``sinh(k_e l)`` with
``k_e l ~ 1.5e3``.  Numerators and ``det C`` are divided by ``cosh(k_e l)``
before evaluation, so only ``tanh`` and ``sech`` of the large argument
appear.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import PhysicalParams
from .steady_state import photon_number


class BeamResonanceError(ArithmeticError):
    """``det C`` vanishes: the frequency sits on a violin resonance."""


class DegenerateModesError(ArithmeticError):
    """The two normal-mode branches coincide."""


@dataclass(frozen=True)
class ModeCouplings:
    """Coupling coefficients of the two-mode equations of motion.

    The exact complex values (``wA2``, ``DA2``, ``wB2``, ``DB2``) are set by
    :func:`couplings_exact`; the low-frequency real parts and the
    coefficients of ``i*phi`` by :func:`couplings_lowfreq`.  Unset fields are
    ``None``.
    """

    wA2: complex | None = None
    DA2: complex | None = None
    wB2: complex | None = None
    DB2: complex | None = None
    wAR2: float | None = None
    DAR2: float | None = None
    wBR2: float | None = None
    DBR2: float | None = None
    wAI2: float | None = None
    DAI2: float | None = None
    wBI2: float | None = None
    DBI2: float | None = None
    photon_number: float | None = None
    detuning: float | None = None

    def complex_split(self, phi: float):
        """``(wA2, DA2, wB2, DB2)`` rebuilt as ``R + i phi I``."""
        return (
            self.wAR2 + 1j * phi * self.wAI2,
            self.DAR2 + 1j * phi * self.DAI2,
            self.wBR2 + 1j * phi * self.wBI2,
            self.DBR2 + 1j * phi * self.DBI2,
        )


@dataclass(frozen=True)
class NormalModes:
    """Normal-mode frequencies and dissipation of both branches.

    ``w1_plus``/``w1_minus`` are decay rates per unit loss factor: the
    complex root of the quartic is ``w0 - i phi w1``.  ``gamma_r`` is
    ``phi0 * w1_plus``, the structural damping rate of the pendulum branch.
    """

    w0_plus: float
    w0_minus: float
    w1_plus: float
    w1_minus: float
    gamma_r: float
    correction: float


def _tanh_sech(z):
    """``tanh`` and ``sech`` of a complex argument with ``Re z >= 0``."""
    e = np.exp(-2 * z)
    return (1 - e) / (1 + e), 2 * np.exp(-z) / (1 + e)


def wavenumbers(p: PhysicalParams, omega, phi: float = 0.0):
    """Beam wavenumbers ``k`` and ``k_e`` at angular frequency ``omega``.

    Parameters
    ----------
    p : PhysicalParams
    omega : float or array_like
        Angular frequency (rad/s).
    phi : float
        Loss factor; the rigidity is ``E0 I (1 - i phi)``.

    Returns
    -------
    k, k_e, k_approx, ke_approx
        Exact complex wavenumbers and their low-frequency forms
        ``sqrt(rho/T) omega`` and ``sqrt(T/EI)``.
    """
    w = np.asarray(omega, dtype=float)
    T = p.mirror_mass * p.gravity
    EI = p.flexural_rigidity * (1 - 1j * phi)
    rho = p.beam_density
    limit = T**2 / (4 * p.flexural_rigidity * rho)
    if np.any(w**2 > 0.01 * limit):
        warnings.warn("omega^2 is not small against T^2/(4 EI rho)", stacklevel=2)
    root = np.sqrt(T**2 + 4 * EI * rho * w**2)
    # (-T + root)/(2EI) rewritten to avoid cancellation at small omega
    k = np.sqrt(2 * rho * w**2 / (T + root))
    ke = np.sqrt((T + root) / (2 * EI))
    return k, ke, np.sqrt(rho / T) * w, np.sqrt(T / p.flexural_rigidity) + 0 * w


def _radiation_term(p: PhysicalParams, delta: float, omega):
    n_c = photon_number(p, delta)
    D = -2 * p.optical_decay * delta
    return 2 * p.hbar * p.coupling**2 * n_c * D / ((p.optical_decay - 1j * omega) ** 2 + D**2)


def couplings_exact(p: PhysicalParams, omega: float, phi: float, delta: float | None = None):
    """Exact complex coupling coefficients at one frequency.

    Parameters
    ----------
    p : PhysicalParams
    omega : float
        Angular frequency, strictly positive.
    phi : float
        Loss factor entering ``E = E0 (1 - i phi)``.
    delta : float, optional
        Normalized detuning, default ``p.detuning_norm``.

    Returns
    -------
    ModeCouplings
        With the exact fields ``wA2``, ``DA2``, ``wB2``, ``DB2`` set.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if delta is None:
        delta = p.detuning_norm
    M, J, ell, h = p.mirror_mass, p.moment_of_inertia, p.beam_length, p.offset
    T = M * p.gravity
    EI = p.flexural_rigidity * (1 - 1j * phi)
    k, ke, _, _ = wavenumbers(p, omega, phi)
    k, ke = complex(k), complex(ke)
    th, sech = _tanh_sech(ke * ell)
    s, c = np.sin(k * ell), np.cos(k * ell)
    k2, ke2 = k * k, ke * ke

    det = 2 * k * (sech - c) + (ke2 - k2) / ke * s * th
    if abs(det) < 1e-12 * abs(k * ke * ell):
        raise BeamResonanceError(f"det C vanishes at omega = {omega}")
    mix = k * s + ke * c * th  # (k sin cosh + k_e cos sinh)/cosh

    wA2 = -(1 / M) * (-EI * k / det * (k2 + ke2) * mix + _radiation_term(p, delta, omega))
    DA2 = (1 / M) * (
        -T
        + EI / det * (
            k * (ke2 - k2) * sech
            + (ke2 * ke2 + k2 * k2) / ke * s * th
            - k * (ke2 - k2) * c
            + h * k * (k2 + ke2) * mix
        )
    )
    wB2 = -(EI / J) * (k / det) * (
        (ke2 - k2) * sech - 2 * k * ke * s * th - (ke2 - k2) * c - h * (k2 + ke2) * mix
    )
    DB2 = (EI / J) / det * (k2 + ke2) / ke * (
        ke * (1 + h * h * k2) * s + (k * (-1 + h * h * ke2) * c + h * (k2 + ke2) * s) * th
    )
    return ModeCouplings(wA2=complex(wA2), DA2=complex(DA2), wB2=complex(wB2),
                         DB2=complex(DB2), photon_number=photon_number(p, delta),
                         detuning=-2 * p.optical_decay * delta)


def couplings_lowfreq(p: PhysicalParams, delta: float | None = None) -> ModeCouplings:
    """Closed-form low-frequency coefficients and their real/imaginary split.

    The optical-spring part of ``wAR2`` is ``-2 hbar G0^2 n_c Delta /
    (M (kappa^2+Delta^2))``; it stiffens the pendulum for ``delta > 0``.
    """
    if delta is None:
        delta = p.detuning_norm
    M, J, ell, h = p.mirror_mass, p.moment_of_inertia, p.beam_length, p.offset
    T = M * p.gravity
    sq = math.sqrt(p.flexural_rigidity / T)
    n_c = photon_number(p, delta)
    D = -2 * p.optical_decay * delta
    spring = 2 * p.hbar * p.coupling**2 * n_c * D / (p.optical_decay**2 + D**2)
    bracket = 1 + (1 / h + 2 / ell) * sq
    wAR2 = -(1 / M) * (-T / ell * (1 + 2 / ell * sq) + spring)
    DAR2 = T * h / (M * ell) * bracket
    wBR2 = T * h / (J * ell) * bracket
    DBR2 = T * h / J * (bracket + h / ell)
    wAI2 = -T / (M * ell**2) * sq
    DAI2 = -(2 * h + ell) * T / (2 * M * ell**2) * sq
    wBI2 = -(2 * h + ell) * T / (2 * J * ell**2) * sq
    DBI2 = -(2 * h + ell) * T / (2 * J * ell) * sq
    return ModeCouplings(
        wAR2=wAR2, DAR2=DAR2, wBR2=wBR2, DBR2=DBR2,
        wAI2=wAI2, DAI2=DAI2, wBI2=wBI2, DBI2=DBI2,
        photon_number=n_c, detuning=D,
    )


def separation_ratio(mc: ModeCouplings) -> float:
    """``(DBR2 - wAR2)^2 / (DAR2 wBR2)``; large means weakly mixed modes."""
    return (mc.DBR2 - mc.wAR2) ** 2 / (mc.DAR2 * mc.wBR2)


def _w1(mc: ModeCouplings, w02: float) -> float:
    num = (
        -w02 * (mc.DBI2 + mc.wAI2)
        + mc.DBR2 * mc.wAI2
        + mc.DBI2 * mc.wAR2
        - mc.DAR2 * mc.wBI2
        - mc.DAI2 * mc.wBR2
    )
    return num / (2 * math.sqrt(w02) * (2 * w02 - mc.wAR2 - mc.DBR2))


def normal_modes(p: PhysicalParams, delta: float | None = None, rtol: float = 1e-12) -> NormalModes:
    """Normal-mode frequencies, first-order dissipation and damping rate.

    Notes
    -----
    ``w0_plus`` is the branch with the larger ``w0^2`` (the pendulum for the
    reference parameters).  The quotient formula for ``w1`` returns the decay
    rate; the corresponding root of the quartic is ``w0 - i phi w1``.  The
    second-order correction term of the pendulum branch is returned as the
    diagnostic ``correction`` and is not applied.
    """
    mc = couplings_lowfreq(p, delta)
    disc = (mc.wAR2 - mc.DBR2) ** 2 + 4 * mc.DAR2 * mc.wBR2
    if disc < 0:
        raise DegenerateModesError("negative discriminant")
    s = math.sqrt(disc)
    if s <= rtol * abs(mc.wAR2 + mc.DBR2):
        raise DegenerateModesError("normal-mode branches are degenerate")
    w02p = 0.5 * (mc.DBR2 + mc.wAR2 + s)
    w02m = 0.5 * (mc.DBR2 + mc.wAR2 - s)
    if w02m <= 0:
        raise DegenerateModesError("lower branch is unstable (w0^2 <= 0)")
    w1p, w1m = _w1(mc, w02p), _w1(mc, w02m)
    corr = (mc.DAR2 * mc.wBI2 + mc.DAI2 * mc.wBR2) / ((mc.wAR2 - mc.DBR2) * mc.wAI2)
    return NormalModes(
        w0_plus=math.sqrt(w02p),
        w0_minus=math.sqrt(w02m),
        w1_plus=w1p,
        w1_minus=w1m,
        gamma_r=p.loss_factor * w1p,
        correction=corr,
    )


def quartic_roots(p: PhysicalParams, delta: float | None = None, phi: float | None = None):
    """Roots with positive real part of ``f(w) = -(w^2-wA2)(w^2-DB2)+DA2 wB2``.

    Uses the complex split coefficients at loss factor ``phi`` (default
    ``p.loss_factor``); sorted by descending real part.
    """
    if phi is None:
        phi = p.loss_factor
    A, C, E, B = couplings_lowfreq(p, delta).complex_split(phi)
    w2 = np.roots([-1, A + B, -(A * B) + C * E])
    w = np.sqrt(w2.astype(complex))
    w = np.where(w.real < 0, -w, w)
    return w[np.argsort(-w.real)]


def structural_damping(p: PhysicalParams, omega):
    """Structural-damping rate ``Gamma_r(omega) = Gamma_r(Omega) Omega/omega``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be positive")
    out = p.mech_decay_rot * p.pendulum_freq / w
    return float(out) if out.ndim == 0 else out


def derived_gamma_r_at_pendulum(p: PhysicalParams) -> float:
    """``Gamma_r(Omega)`` predicted by the beam model: ``phi0 |wAI2| / (2 Omega)``.

    This is the leading-order pendulum-branch decay rate ``-phi0 wAI2/(2 w0)``
    evaluated at ``w0 = Omega``.
    """
    mc = couplings_lowfreq(p, 0.0)
    return p.loss_factor * abs(mc.wAI2) / (2 * p.pendulum_freq)


def damping_slope(p: PhysicalParams, f_lo: float = 180.0, f_hi: float = 650.0,
                  n: int = 200, leading_order: bool = False):
    """Log-log slope of ``Gamma_r(w0+)`` against ``w0+`` over a band in Hz.

    Samples ``w0+`` log-uniformly by solving for the detuning that places
    the pendulum branch at each frequency.

    Returns
    -------
    slope : float
    freqs_hz, gammas : ndarray
    """
    from scipy.optimize import brentq

    def w0p(d):
        return normal_modes(p, d).w0_plus

    fs = np.geomspace(f_lo, f_hi, n)
    ws, gs = [], []
    for f in fs:
        target = 2 * math.pi * f
        hi = 1e-3
        while w0p(hi) < target:
            hi *= 2
            if hi > 1e3:
                raise ValueError(f"cannot reach {f} Hz by detuning")
        d = brentq(lambda x: w0p(x) - target, 0.0, hi, xtol=1e-15, rtol=1e-14)
        nm = normal_modes(p, d)
        ws.append(nm.w0_plus)
        if leading_order:
            mc = couplings_lowfreq(p, d)
            gs.append(-p.loss_factor * mc.wAI2 / (2 * nm.w0_plus))
        else:
            gs.append(nm.gamma_r)
    ws, gs = np.array(ws), np.array(gs)
    slope = np.polyfit(np.log(ws), np.log(gs), 1)[0]
    return float(slope), ws / (2 * math.pi), gs
