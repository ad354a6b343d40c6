"""State metrics: purity, Wigner ellipses and two-mirror entanglement.

All matrices here are vacuum-normalized (vacuum covariance = identity).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import PhysicalParams
from .covariance import CovMat2, model_covariance
from .spectra import build_model

#: Tolerance on ``det V >= 1`` before a state is flagged unphysical.
HEISENBERG_TOL = 1e-9


class UnphysicalStateError(ValueError):
    """A covariance violates the uncertainty principle or positivity."""


def _as_matrix(V) -> np.ndarray:
    if isinstance(V, CovMat2):
        return V.normalized()
    return np.asarray(V, dtype=float)


def purity(V) -> float:
    """``1/sqrt(det V)`` of a normalized 2x2 covariance.

    A determinant below one by more than ``HEISENBERG_TOL`` triggers a
    warning and the purity is reported clamped to 1.
    """
    det = float(np.linalg.det(_as_matrix(V)))
    if det <= 0:
        raise UnphysicalStateError("covariance is not positive definite")
    if det < 1 - HEISENBERG_TOL:
        warnings.warn(f"det V = {det:.12g} < 1: unphysical state, purity clamped to 1",
                      stacklevel=2)
        return 1.0
    return 1.0 / math.sqrt(det)


@dataclass(frozen=True)
class WignerEllipse:
    """Contour ``u^T V^{-1} u = 2`` of a Gaussian Wigner function.

    That contour is where ``W`` drops to ``W_max / e``.
    """

    points: np.ndarray
    semi_axes: tuple
    angle: float
    center: tuple = (0.0, 0.0)

    @property
    def area(self) -> float:
        return math.pi * self.semi_axes[0] * self.semi_axes[1]


def wigner_ellipse(V, n_points: int = 256) -> WignerEllipse:
    """Parametric ``1/e`` contour of the Wigner function of covariance ``V``.

    Parameters
    ----------
    V : CovMat2 or array_like
        Normalized 2x2 covariance.
    n_points : int
        Number of contour points (closed curve, last point not repeated).

    Returns
    -------
    WignerEllipse
        Semi-axes ``sqrt(2 lambda_i)`` ordered (major, minor); ``angle`` is
        the direction of the major axis in radians.
    """
    Vm = _as_matrix(V)
    if not np.allclose(Vm, Vm.T):
        raise ValueError("covariance must be symmetric")
    lam, vec = np.linalg.eigh(Vm)
    if lam[0] <= 0:
        raise UnphysicalStateError("covariance is not positive definite")
    t = np.linspace(0.0, 2 * math.pi, n_points, endpoint=False)
    circle = np.sqrt(2.0) * np.vstack([np.cos(t), np.sin(t)])
    pts = (vec @ np.diag(np.sqrt(lam)) @ circle).T
    major = vec[:, 1]
    return WignerEllipse(
        points=pts,
        semi_axes=(math.sqrt(2 * lam[1]), math.sqrt(2 * lam[0])),
        angle=math.atan2(major[1], major[0]),
    )


# ---------------------------------------------------------------------------
# Two-mirror entanglement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntanglementResult:
    delta: float
    kappa_ratio: float
    log_negativity: float
    nu_min: float
    covariance: np.ndarray


def two_mirror_covariance(V_plus: np.ndarray, V_minus: np.ndarray) -> np.ndarray:
    """4x4 covariance of mirrors 1 and 2 from common and differential modes.

    With ``q_{1,2} = (q_+ +- q_-)/sqrt(2)`` (and likewise for momenta), the
    per-mirror blocks are ``(V+ + V-)/2`` and the cross block is
    ``(V+ - V-)/2``.  Ordering is ``(q1, p1, q2, p2)``.
    """
    Vp, Vm = np.asarray(V_plus, float), np.asarray(V_minus, float)
    A = 0.5 * (Vp + Vm)
    C = 0.5 * (Vp - Vm)
    return np.block([[A, C], [C.T, A]])


def symplectic_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a normalized ``2n x 2n`` covariance."""
    n = V.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.linalg.eigvals(1j * omega @ V)
    return np.sort(np.abs(ev.real))[::2]


def log_negativity(V4: np.ndarray) -> tuple:
    """``(E_N, nu_min)`` of the partial transpose of a two-mode covariance.

    ``nu_min`` within ``HEISENBERG_TOL`` of one counts as separable, so
    rounding on a product of vacua does not report entanglement.
    """
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    if np.min(np.linalg.eigvalsh(V4)) <= 0:
        raise UnphysicalStateError("composite covariance is not positive definite")
    nu = symplectic_eigenvalues(P @ V4 @ P)
    nu_min = float(nu[0])
    if nu_min >= 1 - HEISENBERG_TOL:
        return 0.0, nu_min
    return -math.log(nu_min), nu_min


def _common_frame(V: CovMat2, freq: float, p: PhysicalParams) -> np.ndarray:
    s = (2 * p.mirror_mass * freq / p.hbar, 2 / p.hbar, 2 / (p.hbar * p.mirror_mass * freq))
    return np.array([[V.v11 * s[0], V.v12 * s[1]], [V.v12 * s[1], V.v22 * s[2]]])


def negativity(p: PhysicalParams, delta: float, kappa_ratio: float = 3.0,
               eta: float | None = None) -> EntanglementResult:
    """Logarithmic negativity between two mirrors in a shared cavity system.

    The differential mode sees the decay rate ``kappa`` at detuning
    ``delta``; the common mode sees ``kappa/kappa_ratio`` at the same
    physical detuning ``Delta``, i.e. normalized detuning
    ``kappa_ratio * delta``.  Both mirrors are expressed in one normalized
    frame (the differential-mode pendulum frequency); the negativity does
    not depend on that choice because local scalings are symplectic.
    """
    if kappa_ratio <= 0:
        raise ValueError("kappa_ratio must be positive")
    m_minus = build_model(p, delta, "two", eta)
    p_plus = p.replace(optical_decay=p.optical_decay / kappa_ratio)
    m_plus = build_model(p_plus, kappa_ratio * delta, "two", eta)
    V_minus = model_covariance(m_minus, "pendulum")
    V_plus = model_covariance(m_plus, "pendulum")
    freq = m_minus.norm_freq["pendulum"]
    V4 = two_mirror_covariance(_common_frame(V_plus, freq, p), _common_frame(V_minus, freq, p))
    en, nu = log_negativity(V4)
    return EntanglementResult(delta=delta, kappa_ratio=kappa_ratio, log_negativity=en,
                              nu_min=nu, covariance=V4)


def purity_two_mode(p: PhysicalParams, delta: float, eta: float | None = None,
                    discard: str | None = None) -> float:
    """Normalized purity of the two-mode pendulum conditional state."""
    return purity(model_covariance(build_model(p, delta, "two", eta), "pendulum", discard))
