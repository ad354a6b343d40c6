import math

import mpmath
import numpy as np
import pytest

from mirrorstate.two_mode import (
    DegenerateModesError,
    couplings_exact,
    couplings_lowfreq,
    damping_slope,
    derived_gamma_r_at_pendulum,
    normal_modes,
    quartic_roots,
    separation_ratio,
    structural_damping,
    wavenumbers,
)

TWO_PI = 2 * math.pi
FIELDS = ("wA2", "DA2", "wB2", "DB2")


def _beam_oracle(p, omega, phi, dps=1600):
    """Coupling coefficients from a direct solve of the beam boundary-value problem.

    The beam carries ``X(s) = A (cos ks - cosh k_e s) + B (sin ks - (k/k_e) sinh k_e s)``
    (clamped at ``s = 0``).  Unit displacements ``dq`` and ``dPhi`` of the
    mirror fix ``A, B``; the shear and bending moment at ``s = l`` give the
    force and torque on the mirror.  Computed at ``dps`` digits because
    ``cosh(k_e l) ~ 1e630``.
    """
    with mpmath.workdps(dps):
        M, J, ell, h = (mpmath.mpf(x) for x in (p.mirror_mass, p.moment_of_inertia,
                                                p.beam_length, p.offset))
        T = M * p.gravity
        EI = mpmath.mpf(p.flexural_rigidity) * (1 - 1j * mpmath.mpf(phi))
        rho, w = mpmath.mpf(p.beam_density), mpmath.mpf(omega)
        r = mpmath.sqrt(T**2 + 4 * EI * rho * w**2)
        k, ke = mpmath.sqrt((-T + r) / (2 * EI)), mpmath.sqrt((T + r) / (2 * EI))
        trig = [mpmath.cos, lambda x: -mpmath.sin(x), lambda x: -mpmath.cos(x), mpmath.sin]
        strig = [mpmath.sin, mpmath.cos, lambda x: -mpmath.sin(x), lambda x: -mpmath.cos(x)]
        hyp = [mpmath.cosh, mpmath.sinh]
        shyp = [mpmath.sinh, mpmath.cosh]

        def d(n, A, B):
            fA = k**n * trig[n % 4](k * ell) - ke**n * hyp[n % 2](ke * ell)
            fB = k**n * strig[n % 4](k * ell) - (k / ke) * ke**n * shyp[n % 2](ke * ell)
            return A * fA + B * fB

        out = {}
        for name, (dq, dP) in {"q": (1, 0), "P": (0, 1)}.items():
            mat = mpmath.matrix([[d(0, 1, 0), d(0, 0, 1)], [d(1, 1, 0), d(1, 0, 1)]])
            A, B = mpmath.lu_solve(mat, mpmath.matrix([dq - h * dP, dP]))
            force = -T * dP + EI * d(3, A, B)
            torque = -EI * (d(2, A, B) + h * d(3, A, B))
            out[name] = (force / M, torque / J)
        return [complex(x) for x in (-out["q"][0], out["P"][0], out["q"][1], -out["P"][1])]


# ---------------------------------------------------------------------------
# wavenumbers
# ---------------------------------------------------------------------------

def test_wavenumbers_static_limit(p):
    k, ke, _, ke_approx = wavenumbers(p, 0.0)
    assert k == 0
    assert ke.real == pytest.approx(float(ke_approx), rel=1e-14)
    assert ke.real == pytest.approx(math.sqrt(p.mirror_mass * p.gravity / p.flexural_rigidity))


def test_wavenumbers_low_frequency_form(p):
    k, _, k_approx, _ = wavenumbers(p, TWO_PI * 500)
    assert abs(k - k_approx) / abs(k_approx) < 1e-4


def test_lossless_wavenumbers_are_real(p):
    k, ke, _, _ = wavenumbers(p, np.linspace(1.0, 1e4, 5), phi=0.0)
    assert np.all(np.abs(np.imag(k)) == 0) and np.all(np.abs(np.imag(ke)) == 0)


# ---------------------------------------------------------------------------
# exact couplings
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("freq", [5.0, 100.0])
def test_exact_couplings_match_beam_oracle(p, freq):
    q = p.replace(laser_power=1e-30)
    ex = couplings_exact(q, TWO_PI * freq, 1e-3, 0.0)
    oracle = _beam_oracle(q, TWO_PI * freq, 1e-3)
    for name, ref in zip(FIELDS, oracle):
        assert abs(getattr(ex, name) - ref) / abs(ref) < 1e-10, name


def test_exact_couplings_finite_at_large_argument(p):
    ex = couplings_exact(p, TWO_PI * 5, 1e-3)
    assert all(np.isfinite(getattr(ex, f)) for f in FIELDS)


def test_no_light_no_detuning_dependence(p):
    q = p.replace(laser_power=1e-300)
    a = couplings_exact(q, TWO_PI * 5, 1e-3, 0.0)
    b = couplings_exact(q, TWO_PI * 5, 1e-3, 0.7)
    assert a.wA2 == pytest.approx(b.wA2, rel=1e-15)


def test_nonpositive_frequency_rejected(p):
    with pytest.raises(ValueError):
        couplings_exact(p, 0.0, 1e-3)


@pytest.mark.parametrize("field", FIELDS)
def test_exact_vs_lowfreq_at_5hz(p, field):
    """Reference example: relative agreement 1e-5 at 5 Hz and phi = 1e-3."""
    ex = couplings_exact(p, TWO_PI * 5, 1e-3)
    lf = dict(zip(FIELDS, couplings_lowfreq(p).complex_split(1e-3)))
    ref = lf[field]
    assert abs(getattr(ex, field) - ref) / abs(ref) < 1e-5


@pytest.mark.parametrize("phi", [0.0, 1e-3])
def test_exact_tends_to_lowfreq(p, phi):
    """Invariant: 100 random frequencies in 1-100 Hz agree to 1e-4."""
    rng = np.random.default_rng(11)
    lf = dict(zip(FIELDS, couplings_lowfreq(p).complex_split(phi)))
    worst = {f: 0.0 for f in FIELDS}
    for f in rng.uniform(1.0, 100.0, 100):
        ex = couplings_exact(p, TWO_PI * f, phi)
        for name in FIELDS:
            worst[name] = max(worst[name], abs(getattr(ex, name) - lf[name]) / abs(lf[name]))
    assert max(worst.values()) < 1e-4, worst


# ---------------------------------------------------------------------------
# low-frequency couplings and normal modes
# ---------------------------------------------------------------------------

def test_lowfreq_reference_values(p):
    mc = couplings_lowfreq(p.replace(laser_power=1e-300), 0.0)
    assert math.sqrt(mc.wAR2) / TWO_PI == pytest.approx(4.99, rel=5e-3)
    assert math.sqrt(mc.DBR2) / TWO_PI == pytest.approx(27.2, rel=2e-2)
    assert separation_ratio(mc) == pytest.approx(2.1e2, rel=2e-2)
    assert min(mc.wAR2, mc.DAR2, mc.wBR2, mc.DBR2) > 0


def test_optical_spring_stiffens_for_positive_delta(p):
    assert couplings_lowfreq(p, 0.2).wAR2 > couplings_lowfreq(p, 0.0).wAR2
    assert couplings_lowfreq(p, -0.2).wAR2 < couplings_lowfreq(p, 0.0).wAR2


def test_decoupled_limit(p):
    q = p.replace(offset=1e-9)
    mc = couplings_lowfreq(q, 0.2)
    nm = normal_modes(q, 0.2)
    assert mc.DAR2 * mc.wBR2 < 1e-6 * mc.wAR2 * mc.DBR2
    assert nm.w0_plus == pytest.approx(math.sqrt(mc.wAR2), rel=1e-6)
    assert nm.w0_minus == pytest.approx(math.sqrt(mc.DBR2), rel=1e-6)


def test_mode_frequencies_against_detuning(p):
    # below delta ~ 0.01 the pendulum sits under the rotational mode and the
    # larger-root label moves to the rotational branch
    deltas = np.linspace(0.02, 0.25, 12)
    plus = [normal_modes(p, d).w0_plus for d in deltas]
    minus = np.array([normal_modes(p, d).w0_minus for d in deltas])
    assert np.all(np.diff(plus) > 0)
    assert np.ptp(minus) / minus.mean() < 0.01
    assert minus.mean() / TWO_PI == pytest.approx(27.2, rel=0.02)
    assert all(a >= b > 0 for a, b in zip(plus, minus))


def test_optical_spring_turnover(p):
    """The spring scales as ``delta/(1+4 delta^2)^2`` and peaks at ``1/sqrt(12)``."""
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda d: -couplings_lowfreq(p, d).wAR2, bounds=(0.05, 1.0),
                          method="bounded", options={"xatol": 1e-10})
    assert res.x == pytest.approx(1 / math.sqrt(12), rel=1e-6)


def test_pendulum_dissipation_positive_in_band(p):
    _, freqs, gammas = damping_slope(p, n=20)
    assert freqs[0] == pytest.approx(180.0) and freqs[-1] == pytest.approx(650.0)
    assert np.all(gammas > 0)


def test_structural_damping_slope(p):
    """Reference example: slope -1 +- 1e-2 of Gamma_r(w0+) over 180-650 Hz."""
    slope, _, _ = damping_slope(p, n=40)
    assert abs(slope + 1) <= 1e-2


def test_leading_order_damping_is_exactly_inverse(p):
    slope, _, _ = damping_slope(p, n=40, leading_order=True)
    assert slope == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("delta", [0.0, 0.2, 0.6])
def test_first_order_root_condition(p, delta):
    """``w0 - i phi w1`` solves the phi-linearized quartic to first order in phi."""
    phi = 1e-9
    A, C, E, B = couplings_lowfreq(p, delta).complex_split(phi)
    nm = normal_modes(p, delta)
    for w0, w1 in ((nm.w0_plus, nm.w1_plus), (nm.w0_minus, nm.w1_minus)):
        w = w0 - 1j * phi * w1
        f = -(w**2 - A) * (w**2 - B) + C * E
        fpp = abs(-12 * w0**2 + 2 * (A + B).real)
        assert abs(f) < 1e-6 * fpp * w0**2


def test_branch_labels_follow_roots(p):
    nm = normal_modes(p, 0.3)
    roots = quartic_roots(p, 0.3, phi=0.0)
    assert sorted(roots.real) == pytest.approx(sorted([nm.w0_minus, nm.w0_plus]), rel=1e-12)


def test_degenerate_modes_flagged(p):
    mc = couplings_lowfreq(p, 0.0)
    with pytest.raises(DegenerateModesError):
        normal_modes(p, 0.0, rtol=10.0 * math.sqrt(mc.wAR2 + mc.DBR2))


def test_structural_damping_law(p):
    Om = p.pendulum_freq
    assert structural_damping(p, Om) / TWO_PI == pytest.approx(1.717e-6)
    assert structural_damping(p, 2 * Om) == pytest.approx(p.mech_decay_rot / 2, rel=1e-15)
    with pytest.raises(ValueError):
        structural_damping(p, 0.0)


def test_rotation_factor_from_beam_model(p):
    assert p.mech_decay_rot / p.mech_decay == pytest.approx(4.18, rel=1e-2)
    assert derived_gamma_r_at_pendulum(p) / p.mech_decay == pytest.approx(4.18, rel=1e-2)
