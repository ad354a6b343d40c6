"""Frequency-domain solution of the noisy equations and its spectral densities.

Every linear response is stored as a set of numerator polynomials over a
common susceptibility polynomial ``F(w)``, one numerator per independent
white noise channel::

    channel   strength
    x_in      2 N + 1          amplitude quadrature of the input light
    y_in      2 N + 1          phase quadrature of the input light
    xi        <xi_m^2>         thermal force (with feedback cooling)
    x_vac     1                vacuum entering through detection loss

A response ``Z`` has ``Z(w) = sum_k N_Z,k(w) / F(w) * noise_k(w)``, and the
symmetrized cross spectrum of two responses is
``S_ZW = sum_k s_k conj(N_Z,k) N_W,k / |F|^2``.  Conventions: the forward
transform is ``e^{+i w t}``, causal responses have their poles in the lower
half plane, and the vacuum quadrature variance is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import polyalg as pa
from .config import PhysicalParams
from .steady_state import photon_number
from .two_mode import couplings_lowfreq

mpx = pa.mpx

CHANNELS = ("x_in", "y_in", "xi", "x_vac")
TARGETS = ("X", "q", "p", "phi", "pi")
MODELS = ("two", "one")


@dataclass(frozen=True)
class NoiseVariances:
    """Strengths of the white noise channels.

    ``xi2`` is in CGS (g^2 cm^2 s^-3 per unit bandwidth); the others are in
    vacuum units.
    """

    x_in2: float
    y_in2: float
    x_vac2: float
    xi2: float
    nbar: float
    gamma: float

    def strengths(self) -> tuple:
        return (self.x_in2, self.y_in2, self.xi2, self.x_vac2)


def thermal_noise_variance(p: PhysicalParams, gamma: float | None = None) -> NoiseVariances:
    """White-noise strengths, with the thermal force flattened to a constant.

    Parameters
    ----------
    p : PhysicalParams
    gamma : float, optional
        Mechanical dissipation rate that sets the bath coupling (rad/s).
        Defaults to the structural damping at the pendulum frequency,
        ``p.mech_decay_rot``.

    Notes
    -----
    ``nbar = k_B T0 gamma / (hbar Omega gamma_m) - 1/2`` and
    ``<xi_m^2> = M hbar gamma_m Omega (2 nbar + 1)``.  The feedback damping
    ``gamma_m`` lowers the effective temperature to ``T0 gamma / gamma_m``.
    """
    if gamma is None:
        gamma = p.mech_decay_rot
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    nbar = p.k_B * p.bath_temp * gamma / (p.hbar * p.pendulum_freq * p.feedback_decay) - 0.5
    xi2 = p.mirror_mass * p.hbar * p.feedback_decay * p.pendulum_freq * (2 * nbar + 1)
    n_in = 2 * p.thermal_photons + 1
    return NoiseVariances(x_in2=n_in, y_in2=n_in, x_vac2=1.0, xi2=xi2, nbar=nbar,
                          gamma=gamma)


def thermal_force_coth(p: PhysicalParams, omega, gamma: float | None = None):
    """Thermal-force strength before flattening, ``M hbar gamma_m w coth(hbar w / 2 k_B T_eff)``.

    ``T_eff = T0 gamma / gamma_m`` is the feedback-cooled temperature.  At the
    pendulum frequency this reduces to the flat strength of
    :func:`thermal_noise_variance` up to ``O((hbar w / k_B T_eff)^2)``.
    """
    if gamma is None:
        gamma = p.mech_decay_rot
    w = np.asarray(omega, dtype=float)
    t_eff = p.bath_temp * gamma / p.feedback_decay
    x = p.hbar * w / (2 * p.k_B * t_eff)
    return p.mirror_mass * p.hbar * p.feedback_decay * w / np.tanh(x)


@dataclass(frozen=True)
class RationalSpectrum:
    """``scale * num(w) / |den(w)|^2`` with polynomial ``num`` and ``den``.

    With ``hermitian`` set, ``num`` is real on the real axis (an
    auto-spectrum) and values are returned as a real array.
    """

    num: tuple
    den: tuple
    scale: float = 1.0
    hermitian: bool = False

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        n = np.polyval(pa.to_numpy(self.num), w)
        d = np.polyval(pa.to_numpy(self.den), w)
        out = self.scale * n / np.abs(d) ** 2
        return out.real if self.hermitian else out


@dataclass(frozen=True)
class SusceptibilityF:
    """Common denominator ``F(w)``: ascending coefficients and its roots."""

    coeffs: tuple
    roots: tuple

    def __call__(self, omega):
        return np.polyval(pa.to_numpy(self.coeffs), np.asarray(omega, dtype=float))


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Linear-response model at one detuning, in extended precision.

    Attributes
    ----------
    kind : {"two", "one"}
        Two-mode (pendulum plus rotation) or one-mode (point mirror) model.
    F : SusceptibilityF
    U : tuple
        Factor multiplying the mechanical drive in ``delta q``:
        ``w^2 - Delta_BR^2`` (two-mode) or ``1`` (one-mode).
    numerators : dict
        ``numerators[target][k]`` is the numerator polynomial of ``target``
        (one of ``TARGETS``) for channel ``CHANNELS[k]``.
    strengths : tuple
        Channel strengths in ``CHANNELS`` order.
    consts : dict
        Scalar constants (``C1``, ``C2``, ``C3``, ``C1q``, ``C2q``, ...).
    """

    kind: str
    delta: float
    eta: float
    params: PhysicalParams
    noise: NoiseVariances
    F: SusceptibilityF
    U: tuple
    numerators: dict
    strengths: tuple
    consts: dict
    norm_freq: dict = field(default_factory=dict)

    # ---- polynomial access -------------------------------------------------
    def num(self, target: str) -> list:
        return self.numerators[target]

    @property
    def Fpoly(self) -> list:
        return list(self.F.coeffs)

    def cross_poly(self, t: str, u: str) -> list:
        """Numerator of ``S_tu |F|^2``: ``sum_k s_k conj(N_t,k) N_u,k``."""
        terms = [
            pa.pscale(pa.pmul(pa.pbar(a), b), s)
            for a, b, s in zip(self.num(t), self.num(u), self.strengths)
        ]
        return pa.padd(*terms)

    def J_poly(self) -> list:
        """Monic ``J(w) = S_XX |F|^2 / C1`` (degree ``2 deg F``)."""
        return pa.pscale(self.cross_poly("X", "X"), 1 / self.consts["C1"])

    def K_poly(self, target: str) -> list:
        """``S_{X target} |F|^2``, the numerator of the cross spectrum."""
        return self.cross_poly("X", target)

    # ---- double-precision evaluation --------------------------------------
    def transfer(self, target: str, omega) -> np.ndarray:
        """Channel transfer coefficients, shape ``(4, len(omega))``."""
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        f = self.F(w)
        return np.array([np.polyval(pa.to_numpy(n), w) / f for n in self.num(target)])

    def spectrum(self, t: str, u: str, omega) -> np.ndarray:
        """Symmetrized cross spectrum ``S_tu(w)`` (complex for ``t != u``)."""
        a = self.transfer(t, omega)
        b = self.transfer(u, omega)
        s = np.array(self.strengths, dtype=float)[:, None]
        return np.sum(s * np.conj(a) * b, axis=0)


def _sqrt(x):
    return mpx.sqrt(mpx.mpf(x))


@lru_cache(maxsize=256)
def build_model(p: PhysicalParams, delta: float | None = None, kind: str = "two",
                eta: float | None = None, gamma_thermal: float | None = None) -> SpectralModel:
    """Assemble the spectral model.

    Parameters
    ----------
    p : PhysicalParams
    delta : float, optional
        Normalized detuning; default ``p.detuning_norm``.
    kind : {"two", "one"}
    eta : float, optional
        Detection efficiency; default ``p.detection_eff``.
    gamma_thermal : float, optional
        Dissipation rate setting the thermal force (see
        :func:`thermal_noise_variance`).

    Returns
    -------
    SpectralModel
    """
    if kind not in MODELS:
        raise ValueError(f"kind must be one of {MODELS}")
    if delta is None:
        delta = p.detuning_norm
    if eta is None:
        eta = p.detection_eff
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    noise = thermal_noise_variance(p, gamma_thermal)
    mc = couplings_lowfreq(p, delta)
    n_c = mpx.mpf(photon_number(p, delta))
    M, Jm = mpx.mpf(p.mirror_mass), mpx.mpf(p.moment_of_inertia)
    hb, G0 = mpx.mpf(p.hbar), mpx.mpf(p.coupling)
    kap = mpx.mpf(p.optical_decay)
    Dl = mpx.mpf(-2.0) * kap * mpx.mpf(delta)
    gm = mpx.mpf(p.feedback_decay)
    k2D2 = kap**2 + Dl**2

    a = hb * G0 * mpx.sqrt(n_c) * mpx.sqrt(2 * kap) / (M * k2D2)
    b = 2 * G0 * mpx.sqrt(n_c) * Dl * mpx.sqrt(2 * kap) / k2D2
    r = 1 - 2 * kap**2 / k2D2
    s = 2 * kap * Dl / k2D2
    e = mpx.mpf(eta)
    se, sl = mpx.sqrt(e), mpx.sqrt(1 - e)
    x2, y2 = mpx.mpf(noise.x_in2), mpx.mpf(noise.y_in2)
    xi2 = mpx.mpf(noise.xi2)

    if kind == "two":
        if mc.wAR2 <= 0:
            raise ArithmeticError("pendulum is statically unstable (w_AR^2 <= 0)")
        wAR2, DAR2 = mpx.mpf(mc.wAR2), mpx.mpf(mc.DAR2)
        wBR2, DBR2 = mpx.mpf(mc.wBR2), mpx.mpf(mc.DBR2)
        U = pa.poly([-DBR2, 0, 1])
        F = pa.padd(
            pa.pscale(pa.pmul(pa.poly([-wAR2, 1j * gm, 1]), U), -1),
            pa.poly([DAR2 * wBR2]),
        )
        norm = {"pendulum": float(mpx.sqrt(wAR2)), "rotational": float(mpx.sqrt(DBR2))}
    else:
        wm2 = mpx.mpf(p.pendulum_freq) ** 2 - 2 * hb * G0**2 * n_c * Dl / (M * k2D2)
        if wm2 <= 0:
            raise ArithmeticError("mirror is statically unstable (w_m^2 <= 0)")
        U = pa.poly([1])
        F = pa.poly([wm2, -1j * gm, -1])
        wBR2 = DBR2 = None
        norm = {"pendulum": float(mpx.sqrt(wm2))}

    drive = [a * kap, a * Dl, 1 / M, mpx.mpf(0)]
    nq = [pa.pscale(U, d) for d in drive]
    nX = [
        pa.pscale(pa.padd(pa.pscale(F, r), pa.pscale(U, -b * a * kap)), se),
        pa.pscale(pa.padd(pa.pscale(F, -s), pa.pscale(U, -b * a * Dl)), se),
        pa.pscale(U, -se * b / M),
        pa.pscale(F, sl),
    ]
    numerators = {
        "X": nX,
        "q": nq,
        "p": [pa.pmul(pa.poly([0, -1j * M]), n) for n in nq],
    }
    if kind == "two":
        nphi = [pa.poly([-wBR2 * d]) for d in drive]
        numerators["phi"] = nphi
        numerators["pi"] = [pa.pmul(pa.poly([0, -1j * Jm]), n) for n in nphi]

    C1 = e * (r**2 * x2 + s**2 * y2) + (1 - e)
    C2 = -e * b * a * (r * kap * x2 - s * Dl * y2)
    C3 = e * ((b * a) ** 2 * (kap**2 * x2 + Dl**2 * y2) + b**2 * xi2 / M**2)
    C1q = se * a * (r * kap * x2 - s * Dl * y2)
    C2q = -se * b * (a**2 * (kap**2 * x2 + Dl**2 * y2) + xi2 / M**2)
    Sdrive = a**2 * (kap**2 * x2 + Dl**2 * y2) + xi2 / M**2
    if C1 <= 0 and eta > 0:
        raise ArithmeticError("C1 must be positive for eta > 0")
    consts = dict(a=a, b=b, r=r, s=s, kappa=kap, Delta=Dl, n_c=n_c, C1=C1, C2=C2,
                  C3=C3, C1q=C1q, C2q=C2q, Sdrive=Sdrive, gamma_m=gm, M=M, J=Jm,
                  wBR2=wBR2, DBR2=DBR2)
    Fc = tuple(F)
    return SpectralModel(
        kind=kind, delta=float(delta), eta=float(eta), params=p, noise=noise,
        F=SusceptibilityF(coeffs=Fc, roots=tuple(pa.proots(F))),
        U=tuple(U), numerators=numerators,
        strengths=tuple(mpx.mpf(x) for x in noise.strengths()),
        consts=consts, norm_freq=norm,
    )


# ---------------------------------------------------------------------------
# Operations on a parameter set
# ---------------------------------------------------------------------------

def mechanical_solutions(p: PhysicalParams, delta: float, omega) -> dict:
    """Transfer coefficients of ``dq``, ``dphi``, ``dp``, ``dpi``.

    Returns
    -------
    dict
        Maps ``"q"``, ``"phi"``, ``"p"``, ``"pi"`` to arrays of shape
        ``(3, n)`` with the coefficients of ``x_in``, ``y_in`` and ``xi_m``.
    """
    m = build_model(p, delta, "two", 1.0)
    return {t: m.transfer(t, omega)[:3] for t in ("q", "phi", "p", "pi")}


def output_field(p: PhysicalParams, delta: float, omega, eta: float | None = None) -> np.ndarray:
    """Transfer coefficients of the homodyne quadrature ``X_A``.

    Shape ``(4, n)``, rows ordered as ``CHANNELS`` (``x_in``, ``y_in``,
    ``xi_m``, ``x_in'``).
    """
    return build_model(p, delta, "two", eta).transfer("X", omega)


def output_spectrum(p: PhysicalParams, delta: float, eta: float | None = None,
                    kind: str = "two") -> RationalSpectrum:
    """``S_XX = C1 J(w)/|F(w)|^2``."""
    m = build_model(p, delta, kind, eta)
    return RationalSpectrum(num=tuple(m.J_poly()), den=m.F.coeffs,
                            scale=float(m.consts["C1"]), hermitian=True)


def J_closed_form(m: SpectralModel) -> list:
    """``J = |F|^2 + (C2/C1) U (F + conj F) + (C3/C1) U^2`` from the constants."""
    F, U, c = m.Fpoly, list(m.U), m.consts
    return pa.padd(
        pa.pmul(F, pa.pbar(F)),
        pa.pscale(pa.pmul(U, pa.padd(F, pa.pbar(F))), c["C2"] / c["C1"]),
        pa.pscale(pa.pmul(U, U), c["C3"] / c["C1"]),
    )


def K_closed_form(m: SpectralModel) -> list:
    """``K = U conj(F) + (C2q/C1q) U^2``; ``S_Xq = C1q K / |F|^2``."""
    F, U, c = m.Fpoly, list(m.U), m.consts
    return pa.padd(pa.pmul(U, pa.pbar(F)), pa.pscale(pa.pmul(U, U), c["C2q"] / c["C1q"]))


def cross_spectrum_q(p: PhysicalParams, delta: float, eta: float | None = None,
                     kind: str = "two") -> RationalSpectrum:
    """``S_{X dq}`` with numerator ``C1q K(w)`` (complex-valued numerator)."""
    m = build_model(p, delta, kind, eta)
    return RationalSpectrum(num=tuple(m.K_poly("q")), den=m.F.coeffs)


def cross_spectrum_phi(p: PhysicalParams, delta: float, eta: float | None = None) -> RationalSpectrum:
    """``S_{X dphi}``; its numerator is ``-w_BR^2`` times the dq one with ``U -> 1``."""
    m = build_model(p, delta, "two", eta)
    return RationalSpectrum(num=tuple(m.K_poly("phi")), den=m.F.coeffs)


def mode_spectra(p: PhysicalParams, delta: float, omega, eta: float | None = None) -> dict:
    """Mechanical spectra on a grid: ``qq``, ``phiphi``, ``pp``, ``pipi``, ``qp``, ``phipi``.

    Cross spectra are complex; their real parts are the symmetrized values.
    """
    m = build_model(p, delta, "two", eta)
    pairs = {"qq": ("q", "q"), "phiphi": ("phi", "phi"), "pp": ("p", "p"),
             "pipi": ("pi", "pi"), "qp": ("q", "p"), "phipi": ("phi", "pi")}
    return {k: m.spectrum(a, b, omega) for k, (a, b) in pairs.items()}
