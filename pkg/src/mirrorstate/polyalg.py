"""Extended-precision polynomial helpers used by the filter and covariance code.

Polynomials are plain lists of ``mpc`` coefficients in ascending order
(``p[i]`` multiplies ``w**i``).  All arithmetic runs in a private mpmath
context so the global mpmath precision is never touched.

Double precision is not enough for this problem: the spectral factor has
zeros within ~1e-5 rad/s of the real axis next to the rotational resonance,
and the conditional variance is a ~1e-6 remainder of two large integrals.
"""
from __future__ import annotations

import numpy as np
from mpmath import MPContext

#: Working precision in decimal digits.
DPS = 50

mpx = MPContext()
mpx.dps = DPS

ZERO = mpx.mpc(0)
ONE = mpx.mpc(1)
OMEGA = [ZERO, ONE]  # the polynomial "w"


def mpc(x) -> "mpx.mpc":
    return mpx.mpc(x)


def poly(coeffs) -> list:
    """Build a polynomial from ascending coefficients."""
    return [mpx.mpc(c) for c in coeffs]


def padd(*ps) -> list:
    n = max(len(p) for p in ps)
    out = [ZERO] * n
    for p in ps:
        for i, c in enumerate(p):
            out[i] += c
    return out


def psub(a, b) -> list:
    return padd(a, pscale(b, -1))


def pscale(p, c) -> list:
    c = mpx.mpc(c)
    return [c * x for x in p]


def pmul(*ps) -> list:
    out = [ONE]
    for p in ps:
        r = [ZERO] * (len(out) + len(p) - 1)
        for i, x in enumerate(out):
            if x == 0:
                continue
            for j, y in enumerate(p):
                r[i + j] += x * y
        out = r
    return out


def pbar(p) -> list:
    """Coefficient-conjugated polynomial: ``pbar(w) = conj(p(conj w))``.

    For real ``w`` this is the complex conjugate of ``p(w)``.
    """
    return [mpx.conj(c) for c in p]


def pval(p, z):
    acc = ZERO
    for c in reversed(p):
        acc = acc * z + c
    return acc


def ptrim(p, rtol=None) -> list:
    """Drop negligible leading coefficients."""
    if rtol is None:
        rtol = mpx.mpf(10) ** (-(DPS - 10))
    p = list(p)
    scale = max((abs(c) for c in p), default=0)
    while len(p) > 1 and abs(p[-1]) <= rtol * scale:
        p.pop()
    return p


def degree(p) -> int:
    return len(ptrim(p)) - 1


def proots(p) -> list:
    """All complex roots, by mpmath's simultaneous iteration at high precision."""
    p = ptrim(p)
    if len(p) <= 1:
        return []
    return list(mpx.polyroots(list(reversed(p)), maxsteps=400, extraprec=4 * DPS * 4))


def from_roots(roots, lead) -> list:
    out = [mpx.mpc(lead)]
    for z in roots:
        out = pmul(out, [-z, ONE])
    return out


def to_numpy(p) -> np.ndarray:
    """Descending complex128 coefficients for :func:`numpy.polyval`."""
    return np.array([complex(c) for c in reversed(p)], dtype=complex)


def rel_close(a, b) -> float:
    """Largest coefficient difference relative to the largest coefficient."""
    n = max(len(a), len(b))
    a = list(a) + [ZERO] * (n - len(a))
    b = list(b) + [ZERO] * (n - len(b))
    scale = max(max(abs(x) for x in a), max(abs(x) for x in b))
    return float(max(abs(x - y) for x, y in zip(a, b)) / scale)


def solve(A, b) -> list:
    """Solve a dense complex linear system with partial pivoting."""
    sol = mpx.lu_solve(mpx.matrix(A), mpx.matrix(b))
    return [sol[i] for i in range(len(b))]


def residue_integral(num, den_factor, keep=None):
    """``int_R num(w) / (D(w) Dbar(w)) dw`` by closing in the upper half plane.

    Parameters
    ----------
    num : list
        Numerator polynomial; its degree must be at most ``2 deg D - 2``.
    den_factor : list
        Polynomial ``D`` whose roots all lie strictly in the lower half plane.
        The poles in the upper half plane are the conjugates of its roots.
    keep : callable, optional
        Predicate on a pole ``z`` (upper half plane).  Poles for which it
        returns False are left out of the residue sum.

    Returns
    -------
    mpc
        ``2 pi i`` times the sum of the retained residues.
    """
    D = ptrim(den_factor)
    n = len(D) - 1
    if degree(num) > 2 * n - 2:
        raise ValueError("integrand does not decay fast enough for a residue sum")
    roots = proots(D)
    if any(mpx.im(z) >= 0 for z in roots):
        raise ValueError("denominator factor has a root off the lower half plane")
    lead = D[-1]
    upper = [mpx.conj(z) for z in roots]
    total = ZERO
    for j, z in enumerate(upper):
        if keep is not None and not keep(z):
            continue
        prod = pval(D, z) * mpx.conj(lead)
        for i, y in enumerate(upper):
            if i != j:
                prod *= z - y
        total += pval(num, z) / prod
    return 2j * mpx.pi * total
