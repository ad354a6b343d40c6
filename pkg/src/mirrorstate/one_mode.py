"""Point-mirror (one-mode) model with closed-form factorization and filters.

The mirror is treated as a single damped oscillator of frequency
``w_m^2 = Omega^2 - 2 hbar G0^2 n_c Delta / (M (kappa^2+Delta^2))``.  Its
output spectrum factors in closed form,
``F'_m = Omega'^2 - i Gamma' w - w^2`` with ``Gamma' = sqrt(alpha + 2 sqrt(beta))``
and ``Omega'^2 = sqrt(beta)``.

The dissipation multiplier ``N`` replaces ``Gamma`` by ``N Gamma`` in the
thermal force of the model used to design the filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polyalg as pa
from .config import PhysicalParams
from .covariance import CovMat2, filtered_covariance, model_covariance
from .spectra import build_model
from .wiener import Filter

mpx = pa.mpx


@dataclass(frozen=True)
class OneModeParams:
    """Closed-form constants of the one-mode model.

    ``E, F_`` are the coefficients of the causal numerator of the
    position filter, ``I, J_`` those of the momentum filter, all in the
    normalization ``H = (C1q/C1)(c1 w + c0)/F'_m``.  The ``*_printed``
    fields hold the simplified forms in which the term
    ``2 gamma_m (Omega'^2 - w_m^2)`` of ``E`` is dropped.
    """

    wm2: float
    gamma_m: float
    gamma: float
    N: float
    alpha: float
    beta: float
    Gp: float
    Op2: float
    Ot2: float
    C1: float
    C1q: float
    E: complex
    F_: complex
    I: complex
    J_: complex
    E_printed: complex
    F_printed: complex
    I_printed: complex
    J_printed: complex

    @property
    def wm(self) -> float:
        return float(np.sqrt(self.wm2))


def _model(p, delta, N, eta):
    return build_model(p, delta, "one", eta, N * p.mech_decay)


def _closed_forms(p: PhysicalParams, delta, N, eta):
    m = _model(p, delta, N, eta)
    c = m.consts
    C1, C2, C3, C1q, C2q = (c[k] for k in ("C1", "C2", "C3", "C1q", "C2q"))
    g, M = c["gamma_m"], c["M"]
    wm2 = mpx.re(m.F.coeffs[0])
    alpha = -2 * C2 / C1 + g**2 - 2 * wm2
    beta = C3 / C1 + 2 * (C2 / C1) * wm2 + wm2**2
    Op2 = mpx.sqrt(beta)
    Gp = mpx.sqrt(alpha + 2 * Op2)
    Ot2 = wm2 + C2q / C1q
    D0 = (Gp * wm2 + g * Op2) * (g + Gp) + (wm2 - Op2) ** 2
    # exact solution of the causal split
    E = 1j * ((Gp + g) * (wm2 - Ot2) + 2 * g * (Op2 - wm2)) / D0
    F_ = (Gp * g * (Ot2 + wm2) + Op2 * (Ot2 - wm2) + g**2 * (Ot2 + wm2)
          - Ot2 * wm2 + wm2**2) / D0
    # momentum target: exact causal split of K_p = -i M w K_q
    A = [[pa.ZERO] * 4 for _ in range(4)]
    Fpb = [mpx.mpc(Op2), 1j * Gp, mpx.mpc(-1)]
    for j in range(2):
        for i, x in enumerate(m.Fpoly):
            A[i + j][j] += x
        for i, x in enumerate(Fpb):
            A[i + j][2 + j] += x
    K = pa.pscale(m.K_poly("p"), 1 / C1q)
    sol = pa.solve(A, (K + [pa.ZERO] * 4)[:4])
    J_, I = sol[2], sol[3]
    # printed (simplified) forms
    E_pr = 1j * (g + Gp) * (wm2 - Ot2) / D0
    F_pr = (wm2 - g**2 - g * Gp - Op2) * (wm2 - Ot2) / D0
    I_pr = -1j * M * wm2 * E_pr
    J_pr = M * (Op2 - wm2) * E_pr / (Gp + g)
    return m, dict(wm2=wm2, g=g, alpha=alpha, beta=beta, Gp=Gp, Op2=Op2, Ot2=Ot2, C1=C1,
                   C1q=C1q, E=E, F_=F_, I=I, J_=J_, E_pr=E_pr, F_pr=F_pr, I_pr=I_pr, J_pr=J_pr, M=M)


def one_mode_effective(p: PhysicalParams, delta: float | None = None, N: float = 1.0,
                       eta: float | None = None) -> OneModeParams:
    """All closed-form constants of the one-mode model at one detuning."""
    m, c = _closed_forms(p, delta, N, eta)
    return OneModeParams(
        wm2=float(c["wm2"]), gamma_m=float(c["g"]), gamma=N * p.mech_decay, N=N,
        alpha=float(c["alpha"]), beta=float(c["beta"]), Gp=float(c["Gp"]),
        Op2=float(c["Op2"]), Ot2=float(c["Ot2"]), C1=float(c["C1"]), C1q=float(c["C1q"]),
        E=complex(c["E"]), F_=complex(c["F_"]), I=complex(c["I"]), J_=complex(c["J_"]),
        E_printed=complex(c["E_pr"]), F_printed=complex(c["F_pr"]),
        I_printed=complex(c["I_pr"]), J_printed=complex(c["J_pr"]),
    )


def one_mode_factorize(p: PhysicalParams, delta: float | None = None, N: float = 1.0,
                       eta: float | None = None):
    """``(Gamma', Omega'^2)`` of the causal factor ``F'_m``."""
    om = one_mode_effective(p, delta, N, eta)
    return om.Gp, om.Op2


def one_mode_factor_poly(om: OneModeParams) -> list:
    """Ascending coefficients of ``F'_m = Omega'^2 - i Gamma' w - w^2``."""
    return pa.poly([om.Op2, -1j * om.Gp, -1])


def one_mode_filters(p: PhysicalParams, delta: float | None = None, N: float = 1.0,
                     eta: float | None = None, printed: bool = False) -> dict:
    """Position and momentum Wiener filters of the one-mode model.

    Parameters
    ----------
    printed : bool
        Use the simplified printed coefficients (``E_printed`` etc., with
        ``H_p = (C1q/C1)(I_printed w + J_printed)/F'_m`` taken literally)
        instead of the exact ones.  The printed forms are kept for
        comparison only.

    Returns
    -------
    dict
        ``{"q": Filter, "p": Filter}`` with denominator ``C1 F'_m``.
    """
    _, c = _closed_forms(p, delta, N, eta)
    den = pa.pscale([mpx.mpc(c["Op2"]), -1j * c["Gp"], mpx.mpc(-1)], c["C1"])
    if printed:
        cq = (c["F_pr"], c["E_pr"])
        cp = (c["J_pr"], c["I_pr"])
    else:
        cq = (c["F_"], c["E"])
        cp = (c["J_"], c["I"])
    return {
        "q": Filter("q", tuple(pa.pscale(pa.poly(cq), c["C1q"])), tuple(den)),
        "p": Filter("p", tuple(pa.pscale(pa.poly(cp), c["C1q"])), tuple(den)),
    }


def one_mode_covariance(p: PhysicalParams, delta: float | None = None, N: float = 1.0,
                        eta: float | None = None) -> CovMat2:
    """Conditional covariance ``V_cm`` of the one-mode model with dissipation ``N Gamma``."""
    return model_covariance(_model(p, delta, N, eta), "pendulum")


def mismatched_nscan(p: PhysicalParams, delta: float | None = None, Ns=(1.0,),
                     eta: float | None = None, discard: str | None = None) -> np.ndarray:
    """Purity of the two-mode pendulum under one-mode filters designed with ``N Gamma``.

    Returns an array of normalized purities, one per ``N``.
    """
    m2 = build_model(p, delta, "two", eta)
    out = []
    for N in Ns:
        V = filtered_covariance(m2, one_mode_filters(p, delta, N, eta), "pendulum", discard)
        Vn = V.normalized()
        out.append(1.0 / np.sqrt(np.linalg.det(Vn)))
    return np.array(out)
