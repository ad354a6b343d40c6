"""Causal spectral factorization and Wiener filters.

With the ``e^{+i w t}`` transform convention a response is causal when all
its poles lie in the lower half plane.  The output spectrum is written as
``S_XX = C1 J / |F|^2`` and factored as ``S+ S-`` with
``S+ = sqrt(C1) F'/F`` where ``F'`` carries the lower-half-plane roots of
``J``.  The causal part of ``S_Xt / S-`` is found by splitting
``K = P' F + P conj(F')``; the filter for target ``t`` is then
``H_t = P / (C1 F')``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polyalg as pa
from .spectra import SpectralModel

mpx = pa.mpx


class DegenerateSpectrumError(ArithmeticError):
    """``J`` has a zero on (or numerically on) the real axis."""


class FactorizationError(ArithmeticError):
    """``F' conj(F')`` does not reproduce ``J``."""


@dataclass(frozen=True, eq=False)
class QuarticFactor:
    """Causal factor ``F'`` of ``J``.

    Attributes
    ----------
    coeffs : tuple
        Ascending coefficients of ``F'``; the leading one equals that of ``F``.
    roots : tuple
        Roots of ``F'``, all with negative imaginary part.
    scale : mpf
        ``sqrt(C1)``.
    J : tuple
        The factored polynomial.
    """

    coeffs: tuple
    roots: tuple
    scale: object
    J: tuple

    @property
    def poly(self) -> list:
        return list(self.coeffs)

    def printed_coefficients(self) -> tuple:
        """``(A, B, C, D)`` of ``F' = -w^4 + A w^3 + B w^2 + C w + D`` (descending)."""
        return tuple(complex(c) for c in reversed(self.coeffs[:-1]))

    def __call__(self, omega):
        return np.polyval(pa.to_numpy(self.coeffs), np.asarray(omega, dtype=float))


def spectral_factorize(J, C1=1, lead=-1, tol=1e-30) -> QuarticFactor:
    """Factor a nonnegative real polynomial as ``J = F' conj(F')``.

    Parameters
    ----------
    J : sequence
        Ascending coefficients, even degree ``2n``, leading coefficient ``+1``
        up to rounding.
    C1 : scalar
        Overall scale of the spectrum; stored as ``sqrt(C1)``.
    lead : complex
        Leading coefficient of ``F'`` (``-1`` matches the susceptibility).
    tol : float
        A root with ``|Im z| < tol |z|`` counts as a real-axis zero.

    Raises
    ------
    DegenerateSpectrumError
        If a root of ``J`` sits on the real axis.
    FactorizationError
        If the roots do not split evenly or the product check fails.
    """
    J = pa.ptrim(pa.poly(J))
    deg = len(J) - 1
    if deg % 2:
        raise FactorizationError("J must have even degree")
    roots = pa.proots(J)
    for z in roots:
        if abs(mpx.im(z)) <= tol * max(abs(z), 1):
            raise DegenerateSpectrumError(f"J has a real-axis zero near {complex(z)}")
    lower = sorted((z for z in roots if mpx.im(z) < 0), key=lambda z: float(mpx.re(z)))
    if len(lower) != deg // 2:
        raise FactorizationError("roots of J do not pair into conjugates")
    Fp = pa.from_roots(lower, lead)
    lead_J = J[-1] / (abs(mpx.mpc(lead)) ** 2)
    Fp = pa.pscale(Fp, mpx.sqrt(mpx.re(lead_J)))
    err = pa.rel_close(pa.pmul(Fp, pa.pbar(Fp)), J)
    if err > 1e-20:
        raise FactorizationError(f"F' conj(F') differs from J by {err:.3g}")
    return QuarticFactor(coeffs=tuple(Fp), roots=tuple(lower),
                         scale=mpx.sqrt(mpx.mpf(mpx.re(C1))), J=tuple(J))


def factorize_model(m: SpectralModel) -> QuarticFactor:
    """Causal factor of the output spectrum of a model."""
    return spectral_factorize(m.J_poly(), m.consts["C1"], lead=m.F.coeffs[-1])


def factorization_coefficient_check(factor: QuarticFactor, J=None) -> np.ndarray:
    """Residuals of the coefficient equations ``coef_k(F' conj F') = coef_k(J)``.

    Returns the real parts of the residuals for ``w^(2n-1)`` down to
    ``w^0`` (eight entries for a quartic), unnormalized.
    """
    J = pa.poly(factor.J if J is None else J)
    prod = pa.pmul(factor.poly, pa.pbar(factor.poly))
    n2 = len(prod) - 1
    J = J + [pa.ZERO] * (n2 + 1 - len(J))
    return np.array([float(mpx.re(prod[k] - J[k])) for k in range(n2 - 1, -1, -1)])


def coefficient_system_factorize(J, start, steps: int = 16, tol=None) -> QuarticFactor:
    """Solve the coefficient equations for ``F'`` by Newton continuation.

    This is the verification backend.  The equations
    ``coef_k(F' conj F') = coef_k(J)`` are followed from ``J_0 =
    start conj(start)`` (whose causal factor is ``start`` itself) to ``J``
    along the straight line ``J_t = (1-t) J_0 + t J``, applying Newton's
    method in rescaled frequency at each step.

    Parameters
    ----------
    J : sequence
        Target polynomial (ascending).
    start : sequence
        A stable polynomial of degree ``n`` with the leading coefficient of
        ``F'``; the susceptibility ``F`` is the natural choice.
    """
    J = pa.poly(J)
    F0 = pa.poly(start)
    n = len(F0) - 1
    lead = F0[-1]
    J0 = pa.pmul(F0, pa.pbar(F0))
    # frequency scale so that the scaled coefficients are O(1)
    s = mpx.mpf(max(abs(z) for z in pa.proots(F0)))
    sc = [s ** (k - n) for k in range(n + 1)]
    sj = [s ** (k - 2 * n) for k in range(2 * n + 1)]
    if tol is None:
        tol = mpx.mpf(10) ** (-(pa.DPS - 12))

    def unpack(x):
        return [mpx.mpc(x[2 * k], x[2 * k + 1]) for k in range(n)] + [lead * sc[n]]

    def residual(c, Jt):
        prod = pa.pmul(c, pa.pbar(c))
        return [mpx.re(prod[k] - Jt[k]) for k in range(2 * n)]

    def jacobian(c):
        cb = pa.pbar(c)
        cols = []
        for k in range(n):
            ek = [pa.ZERO] * k + [pa.ONE]
            du = pa.padd(pa.pmul(ek, cb), pa.pmul(c, ek))
            dv = pa.padd(pa.pscale(pa.pmul(ek, cb), 1j), pa.pscale(pa.pmul(c, ek), -1j))
            du = du + [pa.ZERO] * (2 * n - len(du))
            dv = dv + [pa.ZERO] * (2 * n - len(dv))
            cols.append([mpx.re(v) for v in du[: 2 * n]])
            cols.append([mpx.re(v) for v in dv[: 2 * n]])
        return [[cols[j][i] for j in range(2 * n)] for i in range(2 * n)]

    x = []
    for k in range(n):
        c = F0[k] * sc[k]
        x += [mpx.re(c), mpx.im(c)]
    Js = [J[k] * sj[k] if k < len(J) else pa.ZERO for k in range(2 * n + 1)]
    J0s = [J0[k] * sj[k] for k in range(2 * n + 1)]
    t = mpx.mpf(0)
    dt = mpx.mpf(1) / steps
    while t < 1:
        t_new = min(t + dt, mpx.mpf(1))
        Jt = [(1 - t_new) * a + t_new * b for a, b in zip(J0s, Js)]
        y = list(x)
        ok = False
        for _ in range(60):
            c = unpack(y)
            r = residual(c, Jt)
            if max(abs(v) for v in r) < tol:
                ok = True
                break
            dx = pa.solve(jacobian(c), [-v for v in r])
            y = [a + mpx.re(b) for a, b in zip(y, dx)]
        c = unpack(y)
        stable = all(mpx.im(z) < 0 for z in pa.proots(c))
        if ok and stable:
            x, t = y, t_new
        else:
            dt /= 2
            if dt < mpx.mpf(1) / 2**20:
                raise FactorizationError("coefficient continuation failed to converge")
    c = unpack(x)
    Fp = [c[k] / sc[k] for k in range(n + 1)]
    return QuarticFactor(coeffs=tuple(Fp), roots=tuple(pa.proots(Fp)), scale=pa.ONE,
                         J=tuple(J))


# ---------------------------------------------------------------------------

def split_spectrum(m: SpectralModel, factor: QuarticFactor | None = None):
    """Evaluators of ``S+ = sqrt(C1) F'/F`` and ``S- = conj(S+)`` on real ``w``."""
    factor = factor or factorize_model(m)
    sc = float(factor.scale)

    def s_plus(omega):
        return sc * factor(omega) / m.F(omega)

    def s_minus(omega):
        w = np.asarray(omega, dtype=float)
        return sc * np.conj(factor(w)) / np.conj(m.F(w))

    return s_plus, s_minus


@dataclass(frozen=True, eq=False)
class CausalNumerator:
    """Split ``K_t = P' F + P conj(F')`` for one target.

    ``causal`` is ``P`` (ascending), ``anticausal`` is ``P'``.  ``printed_coefficients``
    gives ``P / C1q`` in descending order, the normalization in which the
    pendulum cross spectrum is ``C1q K / |F|^2``.
    """

    target: str
    causal: tuple
    anticausal: tuple
    K: tuple
    residual: float

    def printed_coefficients(self, C1q) -> tuple:
        return tuple(complex(c / C1q) for c in reversed(self.causal))


def causal_extract(m: SpectralModel, target: str, factor: QuarticFactor | None = None) -> CausalNumerator:
    """Solve the linear system for the causal numerator of target ``target``.

    Raises
    ------
    ArithmeticError
        If ``F`` and ``conj(F')`` share a root (singular system).
    """
    factor = factor or factorize_model(m)
    F = m.Fpoly
    Fpb = pa.pbar(factor.poly)
    n = len(F) - 1
    K = m.K_poly(target)
    if pa.degree(K) > 2 * n - 1:
        raise ArithmeticError("cross spectrum numerator degree too high")
    K = K + [pa.ZERO] * (2 * n - len(K))
    A = [[pa.ZERO] * (2 * n) for _ in range(2 * n)]
    for j in range(n):
        for i, c in enumerate(F):
            if i + j < 2 * n:
                A[i + j][j] += c
        for i, c in enumerate(Fpb):
            if i + j < 2 * n:
                A[i + j][n + j] += c
    try:
        sol = pa.solve(A, K[: 2 * n])
    except ZeroDivisionError as exc:
        raise ArithmeticError("singular causal-part system") from exc
    Pa, P = sol[:n], sol[n:]
    rec = pa.padd(pa.pmul(Pa, F), pa.pmul(P, Fpb))
    scale = max(abs(c) for c in K) or pa.ONE
    resid = float(max(abs(x - y) for x, y in zip(rec + [pa.ZERO], K + [pa.ZERO] * 2)) / scale)
    return CausalNumerator(target=target, causal=tuple(P), anticausal=tuple(Pa),
                           K=tuple(K), residual=resid)


@dataclass(frozen=True, eq=False)
class Filter:
    """Causal filter ``H(w) = num(w)/den(w)`` applied to the output ``X_A``."""

    target: str
    num: tuple
    den: tuple

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.polyval(pa.to_numpy(self.num), w) / np.polyval(pa.to_numpy(self.den), w)


def wiener_filter(m: SpectralModel, target: str, factor: QuarticFactor | None = None) -> Filter:
    """Optimal causal filter ``H_t = P / (C1 F')`` for target ``t``."""
    factor = factor or factorize_model(m)
    cn = causal_extract(m, target, factor)
    den = pa.pscale(factor.poly, m.consts["C1"])
    return Filter(target=target, num=cn.causal, den=tuple(den))


def wiener_filters(m: SpectralModel, targets=None) -> dict:
    """All Wiener filters of a model sharing one factorization."""
    factor = factorize_model(m)
    if targets is None:
        targets = [t for t in ("q", "p", "phi", "pi") if t in m.numerators]
    return {t: wiener_filter(m, t, factor) for t in targets}


def noncausal_filter(m: SpectralModel, target: str, omega):
    """Unconstrained optimum ``S_Xt / S_XX`` (diagnostic only)."""
    return m.spectrum("X", target, omega) / m.spectrum("X", "X", omega).real


def filter_output(m: SpectralModel, filt: Filter, omega):
    """``G = H S+`` on real ``w``."""
    s_plus, _ = split_spectrum(m)
    return filt(omega) * s_plus(omega)


def _laurent_tail(num, den, terms: int = 2) -> list:
    """Coefficients ``c_k`` of ``H = sum_k c_k w^-k`` (k = 1..terms) at large ``w``."""
    num, den = pa.ptrim(list(num)), pa.ptrim(list(den))
    dn, dd = len(num) - 1, len(den) - 1
    if dn >= dd:
        raise ValueError("filter is not strictly proper")
    # H(1/u) = u^(dd-dn) * rev(num)(u) / rev(den)(u); expand the ratio in u
    rn, rd = list(reversed(num)), list(reversed(den))
    q = []
    for k in range(terms):
        acc = rn[k] if k < len(rn) else pa.ZERO
        for j in range(1, k + 1):
            if j < len(rd):
                acc -= rd[j] * q[k - j]
        q.append(acc / rd[0])
    shift = dd - dn
    out = [pa.ZERO] * terms
    for k in range(terms):
        idx = k + 1 - shift
        if 0 <= idx < terms:
            out[k] = q[idx]
    return [complex(c) for c in out]


def causality_fraction(filt: Filter, n: int = 2**16, sigma: float | None = None) -> float:
    """Fraction of impulse-response energy at negative times, by inverse FFT.

    The response is sampled as ``H(w + i sigma)``, whose inverse transform is
    ``h(t) exp(-sigma t)``.  The factor damps the slow tails of narrow
    resonances so that they do not wrap around the periodic time window.
    It also amplifies any anticausal content, which keeps the test strict.
    The first two terms of the high-frequency expansion are subtracted as
    ``c1/(w + i a) + c2/(w + i a)^2`` and their causal transforms
    ``-i c1 exp(-a t) - c2 t exp(-a t)`` are added back analytically.  This
    removes the Gibbs oscillation from the jump and kink of ``h`` at ``t = 0``.

    Parameters
    ----------
    filt : Filter
    n : int
        Number of frequency samples.
    sigma : float, optional
        Damping shift; default chosen so that the window decays by ``1e-12``.
    """
    roots = np.array([complex(z) for z in pa.proots(list(filt.den))])
    W = 16.0 * max(np.max(np.abs(roots)), 1.0)
    dw = 2 * W / n
    T = 2 * np.pi / dw
    if sigma is None:
        sigma = 2 * np.log(1e12) / T
    num, den = pa.to_numpy(filt.num), pa.to_numpy(filt.den)
    alpha = W / 16.0
    c1, c2 = _laurent_tail(filt.num, filt.den, 2)
    # shifting w -> w + i sigma leaves c1 unchanged and c2 -> c2 - i sigma c1
    c2 = c2 - 1j * sigma * c1
    c2p = c2 + 1j * alpha * c1
    w = np.fft.fftfreq(n, d=1.0 / (n * dw))
    z = w + 1j * sigma
    zs = w + 1j * alpha
    G = np.polyval(num, z) / np.polyval(den, z) - c1 / zs - c2p / zs**2
    h = np.fft.fft(G) * dw / (2 * np.pi)
    t = np.fft.fftfreq(n, d=1.0 / T)
    pos = t >= 0
    tp = np.where(pos, t, 0.0)
    h = h + np.where(pos, (-1j * c1 - c2p * tp) * np.exp(-alpha * tp), 0.0)
    e = np.abs(h) ** 2
    return float(e[~pos].sum() / e.sum())
