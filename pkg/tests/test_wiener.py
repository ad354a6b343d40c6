import dataclasses
import math

import numpy as np
import pytest

from mirrorstate import polyalg as pa
from mirrorstate.covariance import filtered_covariance, model_covariance
from mirrorstate.one_mode import one_mode_effective
from mirrorstate.spectra import build_model
from mirrorstate.wiener import (
    DegenerateSpectrumError,
    Filter,
    FactorizationError,
    causal_extract,
    causality_fraction,
    coefficient_system_factorize,
    factorization_coefficient_check,
    factorize_model,
    filter_output,
    noncausal_filter,
    spectral_factorize,
    split_spectrum,
    wiener_filter,
    wiener_filters,
)

TWO_PI = 2 * math.pi
TARGETS = ("q", "p", "phi", "pi")


@pytest.fixture(scope="module")
def m2(p):
    return build_model(p, 0.2, "two", 1.0)


def _coefficient_scale(factor):
    """Coefficients of ``|F'| * |F'|`` (absolute values), highest power first.

    A residual of one coefficient equation is measured against the size of
    the terms that enter it, which stays meaningful for the odd powers where
    ``J`` itself vanishes.
    """
    a = [abs(c) for c in factor.poly]
    prod = pa.pmul(a, a)
    return np.array([float(abs(c)) for c in reversed(prod[:-1])])


def _grid_residual(factor, J, omega):
    worst = 0.0
    for w in omega:
        w = pa.mpc(w)
        f = pa.pval(factor.poly, w)
        j = pa.pval(J, w)
        worst = max(worst, float(abs(f * pa.mpx.conj(f) - j) / abs(j)))
    return worst


# ---------------------------------------------------------------------------
# factorization
# ---------------------------------------------------------------------------

def test_one_mode_factor_matches_closed_form(p):
    m1 = build_model(p, 0.2, "one", 1.0, p.mech_decay)
    om = one_mode_effective(p, 0.2)
    Fp = factorize_model(m1).poly
    assert complex(Fp[0]).real == pytest.approx(om.Op2, rel=1e-10)
    assert -complex(Fp[1]).imag == pytest.approx(om.Gp, rel=1e-10)
    assert complex(Fp[2]) == -1


def test_constructed_double_roots():
    # J = (w^2+1)^2 (w^2+4)^2
    J = pa.pmul(pa.poly([1, 0, 1]), pa.poly([1, 0, 1]), pa.poly([4, 0, 1]), pa.poly([4, 0, 1]))
    f = spectral_factorize(J)
    roots = sorted(complex(z).imag for z in f.roots)
    assert roots == pytest.approx([-2, -2, -1, -1], abs=1e-12)
    ref = pa.pscale(pa.pmul([1j, 1], [1j, 1], [2j, 1], [2j, 1]), -1)
    assert pa.rel_close(f.poly, ref) < 1e-12
    assert pa.rel_close(pa.pmul(f.poly, pa.pbar(f.poly)), J) < 1e-12


def test_real_axis_zero_is_degenerate():
    with pytest.raises(DegenerateSpectrumError):
        spectral_factorize(pa.pmul(pa.poly([-1, 0, 1]), pa.poly([-1, 0, 1])))


def test_odd_degree_rejected():
    with pytest.raises(FactorizationError):
        spectral_factorize(pa.poly([1, 0, 0, 1]))


@pytest.mark.parametrize("delta", [0.05, 0.2, 0.8])
def test_two_mode_factor_identity_on_grid(p, delta):
    m = build_model(p, delta)
    f = factorize_model(m)
    grid = np.linspace(-TWO_PI * 1e4, TWO_PI * 1e4, 1000)
    assert _grid_residual(f, m.J_poly(), grid) < 1e-10
    assert all(complex(z).imag < 0 for z in f.roots)
    A = f.printed_coefficients()[0]
    assert abs(A.real) < 1e-30 * abs(A)


def test_coefficient_check_one_mode_closed_form(p):
    m1 = build_model(p, 0.2, "one", 1.0, p.mech_decay)
    om = one_mode_effective(p, 0.2)
    f = factorize_model(m1)
    closed = dataclasses.replace(f, coeffs=tuple(pa.poly([om.Op2, -1j * om.Gp, -1])))
    J = m1.J_poly()
    res = factorization_coefficient_check(closed, J)
    assert np.all(np.abs(res) <= 1e-10 * _coefficient_scale(closed))


def test_coefficient_check_sensitivity(m2):
    f = factorize_model(m2)
    D = f.coeffs[0]
    bumped = dataclasses.replace(f, coeffs=(D * 1.001,) + f.coeffs[1:])
    res = factorization_coefficient_check(bumped)
    assert res[-1] == pytest.approx(float(abs(D) ** 2) * (1.001**2 - 1), rel=1e-9)
    assert res[-1] == pytest.approx(2e-3 * float(abs(D) ** 2), rel=1e-3)


def test_coefficient_check_reference(m2):
    f = factorize_model(m2)
    J = m2.J_poly()
    res = factorization_coefficient_check(f, J)
    assert np.max(np.abs(res) / _coefficient_scale(f)) < 1e-8


@pytest.mark.parametrize("delta, eta", [(0.2, 1.0), (0.03, 0.7), (0.9, 0.5)])
def test_coefficient_system_backend_agrees(p, delta, eta):
    m = build_model(p, delta, "two", eta)
    f = factorize_model(m)
    g = coefficient_system_factorize(m.J_poly(), m.Fpoly)
    assert pa.rel_close(f.poly, g.poly) < 1e-8


def test_split_spectrum_identities(m2):
    s_plus, s_minus = split_spectrum(m2)
    w = np.linspace(-TWO_PI * 3e3, TWO_PI * 3e3, 997)
    S = m2.spectrum("X", "X", w).real
    assert np.allclose(s_plus(w) * s_minus(w), S, rtol=1e-10)
    assert np.allclose(np.abs(s_plus(w)) ** 2, S, rtol=1e-10)


# ---------------------------------------------------------------------------
# causal numerators and filters
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("target", TARGETS)
def test_causal_split_reconstructs(m2, target):
    cn = causal_extract(m2, target)
    assert cn.residual < 1e-9
    f = factorize_model(m2)
    rec = pa.padd(pa.pmul(list(cn.anticausal), m2.Fpoly),
                  pa.pmul(list(cn.causal), pa.pbar(f.poly)))
    grid = np.linspace(-TWO_PI * 2e3, TWO_PI * 2e3, 101)
    for w in grid:
        k = pa.pval(list(cn.K), w)
        assert float(abs(pa.pval(rec, w) - k)) <= 1e-9 * max(float(abs(k)), 1e-300)


def test_rotation_numerator_scales_with_coupling(m2):
    weak = dataclasses.replace(
        m2, numerators={**m2.numerators,
                        "phi": [pa.pscale(n, 1e-30) for n in m2.numerators["phi"]]})
    strong = causal_extract(m2, "phi").causal
    small = causal_extract(weak, "phi").causal
    assert max(abs(c) for c in small) <= 1e-29 * max(abs(c) for c in strong)


def test_filters_vanish_without_coupling(p):
    m = build_model(p.replace(coupling=1e-30), 0.2)
    H = wiener_filter(m, "q")
    Href = wiener_filter(build_model(p, 0.2), "q")
    w = TWO_PI * np.array([1.0, 100.0, 1e4])
    assert np.all(np.abs(H(w)) < 1e-25 * np.max(np.abs(Href(w))))


@pytest.mark.parametrize("target", TARGETS)
def test_filter_poles_are_causal(m2, target):
    H = wiener_filter(m2, target)
    f = factorize_model(m2)
    assert pa.rel_close(list(H.den), pa.pscale(f.poly, m2.consts["C1"])) < 1e-40
    assert all(complex(z).imag < 0 for z in pa.proots(list(H.den)))


def test_position_filter_decays_as_inverse_frequency(m2):
    H = wiener_filter(m2, "q")
    assert pa.degree(list(H.num)) == pa.degree(list(H.den)) - 1
    w = np.array([1e7, 1e8])
    mag = np.abs(H(w))
    assert mag[0] / mag[1] == pytest.approx(10.0, rel=1e-3)


@pytest.mark.parametrize("delta", [0.05, 0.2, 1.0])
@pytest.mark.parametrize("target", TARGETS)
def test_impulse_responses_are_causal(p, delta, target):
    H = wiener_filter(build_model(p, delta, "two", 0.8), target)
    assert causality_fraction(H) < 1e-6


def test_anticausal_control_is_detected(m2):
    H = wiener_filter(m2, "q")
    mirrored = Filter("q", tuple(pa.pbar(list(H.num))), tuple(pa.pbar(list(H.den))))
    assert causality_fraction(mirrored) > 0.5


def test_optimality_against_perturbed_coefficients(p, m2):
    """Perturbing any numerator coefficient by 1e-3 never lowers the error."""
    H = wiener_filter(m2, "q")
    best = model_covariance(m2, "pendulum").v11
    rng = np.random.default_rng(3)
    for _ in range(5):
        k = int(rng.integers(0, len(H.num)))
        sign = rng.choice([-1.0, 1.0])
        num = list(H.num)
        num[k] = num[k] * (1 + sign * 1e-3)
        V = filtered_covariance(m2, {"q": Filter("q", tuple(num), H.den)}, "pendulum")
        assert V.v11 >= best * (1 - 1e-12)


def test_noncausal_and_causal_outputs(m2):
    w = TWO_PI * np.array([2.0, 30.0, 1500.0])
    Hopt = noncausal_filter(m2, "q", w)
    ref = m2.spectrum("X", "q", w) / m2.spectrum("X", "X", w).real
    assert np.allclose(Hopt, ref, rtol=1e-14)
    H = wiener_filter(m2, "q")
    s_plus, _ = split_spectrum(m2)
    assert np.allclose(filter_output(m2, H, w), H(w) * s_plus(w), rtol=1e-14)


def test_wiener_filters_bundle(m2, p):
    fs = wiener_filters(m2)
    assert set(fs) == set(TARGETS)
    assert set(wiener_filters(build_model(p, 0.2, "one"))) == {"q", "p"}
