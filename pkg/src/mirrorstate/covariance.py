"""Conditional covariance matrices of the mechanical modes.

Each entry is ``(1/2pi) Re int R(w) dw`` with a rational integrand ``R``.
The primary backend closes the contour in the upper half plane and sums
residues at the (conjugated) roots of the denominator factor, in extended
precision.  :func:`quadrature_oracle` evaluates the same integrals with
adaptive double-precision quadrature as an independent check.

Two integrand forms are used.  For the optimal filter of a model the
conditional covariance is ``S_tu - conj(G_t) G_u`` with ``G = H S+``, whose
denominator factor is ``F``.  For an arbitrary causal filter ``H = P/Q``
(e.g. a filter designed for a different model) the estimation error
``t - H X`` has channel numerators ``N_t Q - P N_X`` over ``F Q`` and the
integrand is ``sum_k s_k conj(e_t,k) e_u,k``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import polyalg as pa
from .spectra import SpectralModel, build_model
from .wiener import Filter, factorize_model, wiener_filter

mpx = pa.mpx

MODES = {"pendulum": ("q", "p"), "rotational": ("phi", "pi")}
ENTRIES = ((0, 0), (0, 1), (1, 1))


class PoleClassificationError(ValueError):
    """Pendulum-like and rotational-like poles cannot be told apart."""


@dataclass(frozen=True)
class CovMat2:
    """Symmetric 2x2 covariance in CGS units with its normalization.

    ``scales`` are the factors turning ``(V11, V12, V22)`` into vacuum units
    (vacuum covariance equals the identity).
    """

    v11: float
    v12: float
    v22: float
    mode: str
    scales: tuple

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.v11, self.v12], [self.v12, self.v22]])

    def normalized(self) -> np.ndarray:
        s11, s12, s22 = self.scales
        return np.array([[self.v11 * s11, self.v12 * s12],
                         [self.v12 * s12, self.v22 * s22]])


def normalization_scales(mode: str, mass: float, freq: float, hbar: float) -> tuple:
    """``(2 m w/hbar, 2/hbar, 2/(hbar m w))`` for a mode of mass/inertia ``m``."""
    return (2 * mass * freq / hbar, 2 / hbar, 2 / (hbar * mass * freq))


def normalize_covariance(V: CovMat2) -> np.ndarray:
    """Dimensionless covariance, identity for the vacuum."""
    return V.normalized()


def _scales(m: SpectralModel, mode: str) -> tuple:
    p = m.params
    mass = p.mirror_mass if mode == "pendulum" else p.moment_of_inertia
    return normalization_scales(mode, mass, m.norm_freq[mode], p.hbar)


# ---------------------------------------------------------------------------
# Pole classification
# ---------------------------------------------------------------------------

def pole_threshold(m: SpectralModel) -> float:
    """Geometric mean of the rotational and pendulum root frequencies of ``F``."""
    re = sorted({round(abs(float(mpx.re(z))), 9) for z in m.F.roots})
    if m.kind == "one" or len(re) < 2:
        return 0.0
    lo, hi = re[0], re[-1]
    if hi < 2 * lo:
        raise PoleClassificationError(
            "pendulum and rotational poles are within a factor 2; give an explicit selector"
        )
    return math.sqrt(lo * hi)


def make_selector(m: SpectralModel, discard: str | None):
    """Predicate on poles implementing ``discard`` in {None, "rotational", "pendulum"}."""
    if discard in (None, "none"):
        return None
    if m.kind == "one":
        raise PoleClassificationError("the one-mode model has no rotational poles")
    thr = pole_threshold(m)
    if discard == "rotational":
        return lambda z: abs(float(mpx.re(z))) >= thr
    if discard == "pendulum":
        return lambda z: abs(float(mpx.re(z))) < thr
    raise ValueError(f"unknown discard selector {discard!r}")


# ---------------------------------------------------------------------------
# Integrand construction
# ---------------------------------------------------------------------------

def optimal_integrands(m: SpectralModel, mode: str, filters: dict | None = None):
    """Numerators over ``F conj(F)`` of ``S_tu - conj(G_t) G_u`` for the three entries."""
    t, u = MODES[mode]
    if filters is None:
        factor = factorize_model(m)
        filters = {x: wiener_filter(m, x, factor) for x in (t, u)}
    C1 = m.consts["C1"]
    out = []
    for i, j in ENTRIES:
        a, b = (t, u)[i], (t, u)[j]
        Pa, Pb = list(filters[a].num), list(filters[b].num)
        out.append(pa.psub(m.cross_poly(a, b), pa.pscale(pa.pmul(pa.pbar(Pa), Pb), 1 / C1)))
    return out, m.Fpoly


def error_channels(m: SpectralModel, mode: str, filters: dict):
    """Channel numerators of the estimation errors and their denominator ``D = F Q``.

    ``filters`` maps the two targets of ``mode`` to :class:`Filter` objects
    sharing one denominator ``Q``.  A target missing from ``filters`` is
    left unfiltered (``H = 0``).

    Returns
    -------
    err : dict
        ``err[target][k]`` is the error numerator for channel ``k``.
    D : list
        Common denominator polynomial.
    """
    dens = {tuple(f.den) for f in filters.values()}
    if len(dens) > 1:
        raise ValueError("filters for one mode must share their denominator")
    Q = list(dens.pop()) if dens else [pa.ONE]
    err = {}
    for x in MODES[mode]:
        P = list(filters[x].num) if x in filters else [pa.ZERO]
        err[x] = [pa.psub(pa.pmul(nt, Q), pa.pmul(P, nx))
                  for nt, nx in zip(m.num(x), m.num("X"))]
    return err, pa.pmul(m.Fpoly, Q)


def error_integrands(m: SpectralModel, mode: str, filters: dict):
    """Numerators over ``D conj(D)`` of the filter error spectra, with ``D``."""
    t, u = MODES[mode]
    err, D = error_channels(m, mode, filters)
    out = []
    for i, j in ENTRIES:
        a, b = (t, u)[i], (t, u)[j]
        terms = [pa.pscale(pa.pmul(pa.pbar(ea), eb), s)
                 for ea, eb, s in zip(err[a], err[b], m.strengths)]
        out.append(pa.padd(*terms))
    return out, D


def _residue_entries(nums, D, keep) -> list:
    return [float(mpx.re(pa.residue_integral(n, D, keep)) / (2 * mpx.pi)) for n in nums]


def _to_cov(vals, m, mode) -> CovMat2:
    return CovMat2(v11=vals[0], v12=vals[1], v22=vals[2], mode=mode, scales=_scales(m, mode))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def model_covariance(m: SpectralModel, mode: str = "pendulum", discard: str | None = None,
                     form: str = "optimal") -> CovMat2:
    """Conditional covariance of one mode of ``m`` under its own Wiener filter.

    Parameters
    ----------
    form : {"optimal", "error"}
        Integrand written as ``S - |G|^2`` or as the filter-error spectrum;
        both give the same value and the second serves as a cross-check.
    """
    keep = make_selector(m, discard)
    if form == "optimal":
        nums, D = optimal_integrands(m, mode)
    elif form == "error":
        factor = factorize_model(m)
        filters = {x: wiener_filter(m, x, factor) for x in MODES[mode]}
        nums, D = error_integrands(m, mode, filters)
    else:
        raise ValueError("form must be 'optimal' or 'error'")
    return _to_cov(_residue_entries(nums, D, keep), m, mode)


def unconditional_covariance(m: SpectralModel, mode: str = "pendulum") -> CovMat2:
    """Covariance without any measurement conditioning (``H = 0``)."""
    nums, D = error_integrands(m, mode, {})
    return _to_cov(_residue_entries(nums, D, None), m, mode)


def filtered_covariance(m: SpectralModel, filters: dict, mode: str = "pendulum",
                        discard: str | None = None) -> CovMat2:
    """Covariance of the error left by arbitrary causal ``filters`` on ``m``."""
    keep = make_selector(m, discard)
    nums, D = error_integrands(m, mode, filters)
    return _to_cov(_residue_entries(nums, D, keep), m, mode)


def conditional_covariance(p, delta: float | None = None, eta: float | None = None):
    """Two-mode conditional covariances ``(V_c, V_r)`` of the pendulum and rotation."""
    m = build_model(p, delta, "two", eta)
    return model_covariance(m, "pendulum"), model_covariance(m, "rotational")


def pole_filtered_covariance(p, delta: float | None = None, discard: str | None = "rotational",
                             eta: float | None = None):
    """``(V_c, V_r)`` with the residues of a pole group left out."""
    m = build_model(p, delta, "two", eta)
    return (model_covariance(m, "pendulum", discard),
            model_covariance(m, "rotational", discard))


def mismatched_covariance(p, delta: float | None = None, filters: dict | None = None,
                          eta: float | None = None, N: float = 1.0,
                          discard: str | None = None) -> CovMat2:
    """Pendulum covariance of the two-mode system under one-mode Wiener filters.

    Parameters
    ----------
    filters : dict, optional
        Pendulum filters to apply.  By default the one-mode Wiener filters
        designed with the dissipation ``N * Gamma`` are used.
    N : float
        Dissipation multiplier for the default one-mode filters.
    """
    m = build_model(p, delta, "two", eta)
    if filters is None:
        m1 = build_model(p, delta, "one", eta, N * p.mech_decay)
        factor = factorize_model(m1)
        filters = {x: wiener_filter(m1, x, factor) for x in ("q", "p")}
    return filtered_covariance(m, filters, "pendulum", discard)


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------

class _Factored:
    """Polynomial stored as ``lead * prod(w - z_j)`` for accurate double evaluation.

    Evaluating a high-degree polynomial from its coefficients loses every
    significant digit next to the rotational resonance, whose pole sits
    ~1e-11 rad/s below the real axis.  The product form only forms
    differences ``w - z_j`` and keeps full relative accuracy there.
    """

    def __init__(self, p):
        p = pa.ptrim(p)
        self.zero = all(c == 0 for c in p)
        self.lead = complex(p[-1])
        self.mproots = [] if self.zero else pa.proots(p)
        self.roots = np.array([complex(z) for z in self.mproots], dtype=complex)

    def __call__(self, w: float) -> complex:
        if self.zero:
            return 0j
        return self.lead * np.prod(w - self.roots)

    def shifted(self, c: float):
        """Evaluator of ``t -> P(c + t)``.

        The offsets ``c - z_j`` are formed in extended precision, so a
        resonance narrower than the spacing of doubles near ``c`` keeps its
        exact position.
        """
        if self.zero:
            return lambda t: 0j
        d = np.array([complex(mpx.mpf(c) - z) for z in self.mproots], dtype=complex)
        lead = self.lead
        return lambda t: lead * np.prod(t + d)


def _breakpoints(roots, cutoff: float) -> np.ndarray:
    """Interval ends clustered around every pole on decade scales of its width."""
    pts = {0.0, cutoff}
    for z in roots:
        x0 = abs(z.real)
        g = max(abs(z.imag), 1e-13 * x0, 1e-300)
        d = g
        while d < max(x0, cutoff):
            for x in (x0 - d, x0 + d):
                if 0 < x < cutoff:
                    pts.add(x)
            d *= 10.0
        if 0 < x0 < cutoff:
            pts.add(x0)
    return np.array(sorted(pts))


def quadrature_integrals(err: dict, strengths, D, pairs, cutoff: float = 2 * math.pi * 1e6,
                         rtol: float = 1e-10) -> list:
    """``(1/2pi) Re int sum_k s_k conj(e_a,k) e_b,k / |D|^2 dw`` by adaptive quadrature.

    Parameters
    ----------
    err : dict
        Channel error numerators per target (see :func:`error_channels`).
    strengths : sequence
        Channel strengths.
    D : list
        Denominator polynomial.
    pairs : sequence of (str, str)
        Target pairs to integrate.

    Notes
    -----
    The real part of each integrand is even in ``w``, so ``[0, inf)`` is
    integrated and doubled.  ``[0, cutoff]`` is split at breakpoints
    clustered around the poles; the tail beyond ``cutoff`` is integrated
    after the substitution ``u = 1/w``, where it is smooth (``w^-2`` decay).
    """
    Df = _Factored(D)
    fact = {t: [_Factored(e) for e in es] for t, es in err.items()}
    s = [float(x) for x in strengths]
    pts = _breakpoints(Df.roots, cutoff)
    # each piece is integrated in t = w - c around the nearest pole centre c
    centres = np.array(sorted({0.0} | {abs(z.real) for z in Df.roots}))
    evaluators = {}

    def integrand(a, b, c):
        key = (a, b, c)
        if key not in evaluators:
            den = Df.shifted(c)
            ea = [x.shifted(c) for x in fact[a]]
            eb = [y.shifted(c) for y in fact[b]]

            def f(t):
                acc = 0.0
                for sk, x, y in zip(s, ea, eb):
                    acc += sk * (np.conj(x(t)) * y(t)).real
                return acc / abs(den(t)) ** 2

            evaluators[key] = f
        return evaluators[key]

    results = []
    for a, b in pairs:
        f0 = integrand(a, b, 0.0)

        def tail(u, f=f0):
            u = max(u, 1e-6 / cutoff)
            return f(1.0 / u) / u**2

        # relative tolerance is unreachable on pieces that are ~1e-16 of the
        # total; quad still returns its best estimate, so silence the warning
        parts = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for lo, hi in zip(pts[:-1], pts[1:]):
                c = float(centres[np.argmin(np.abs(centres - 0.5 * (lo + hi)))])
                parts.append(integrate.quad(integrand(a, b, c), lo - c, hi - c, epsabs=0.0,
                                            epsrel=rtol, limit=200)[0])
            parts.append(integrate.quad(tail, 0.0, 1.0 / cutoff, epsabs=0.0, epsrel=rtol,
                                        limit=200)[0])
        results.append(2.0 * math.fsum(parts) / (2 * math.pi))
    return results


def quadrature_oracle(m: SpectralModel, mode: str = "pendulum", filters: dict | None = None,
                      cutoff: float = 2 * math.pi * 1e6) -> CovMat2:
    """Same covariance as the residue backend, by numerical integration.

    Uses the filter-error integrand, with ``m``'s own Wiener filters unless
    ``filters`` is given.
    """
    if filters is None:
        factor = factorize_model(m)
        filters = {x: wiener_filter(m, x, factor) for x in MODES[mode]}
    err, D = error_channels(m, mode, filters)
    t, u = MODES[mode]
    pairs = [((t, u)[i], (t, u)[j]) for i, j in ENTRIES]
    return _to_cov(quadrature_integrals(err, m.strengths, D, pairs, cutoff), m, mode)
