import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorstate.config import (
    ConfigError,
    PhysicalParams,
    derive_constants,
    dump_params,
    load_params,
    table1_path,
)

TEXT = table1_path().read_text(encoding="utf-8")


def _edit(text, key, value=None):
    """Replace (or drop, if ``value`` is None) one ``key = ...`` line."""
    out = []
    for line in text.splitlines():
        if line.split("=")[0].strip() == key:
            if value is not None:
                out.append(f"{key} = {value}")
        else:
            out.append(line)
    return "\n".join(out) + "\n"


def test_table1_values(p):
    assert p.mirror_mass == pytest.approx(7.71e-3)
    assert p.optical_decay / (2 * math.pi) == pytest.approx(8.2e5)
    assert p.pendulum_freq / (2 * math.pi) == pytest.approx(4.99)
    assert p.detection_eff == 1.0


def test_zero_mass_rejected():
    with pytest.raises(ConfigError, match="mirror_mass must be positive"):
        load_params(_edit(TEXT, "mirror_mass", "0"))


def test_missing_eta_defaults_with_warning():
    with pytest.warns(UserWarning, match="detection_eff"):
        q = load_params(_edit(TEXT, "detection_eff"))
    assert q.detection_eff == 1.0


@pytest.mark.parametrize(
    "key, value, pattern",
    [
        ("coupling", None, "coupling"),
        ("laser_power", "thirty", "laser_power"),
        ("bath_temp", "-1", "bath_temp"),
        ("loss_factor", "1.5", "loss_factor"),
        ("detection_eff", "1.2", "detection_eff"),
    ],
)
def test_bad_values_name_the_key(key, value, pattern):
    with pytest.raises(ConfigError, match=pattern):
        load_params(_edit(TEXT, key, value))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="colour"):
        load_params(TEXT + "colour = blue\n")


def test_negative_detuning_allowed():
    q = load_params(_edit(TEXT, "detuning_norm", "-0.3"))
    assert q.detuning_norm == -0.3


def test_derived_constants(p):
    dc = derive_constants(p, 0.2)
    assert dc.tension == pytest.approx(7.5558, rel=1e-12)
    assert dc.beta == pytest.approx(1.452e3, rel=1e-3)
    assert dc.beta * p.beam_length > 1e3
    assert derive_constants(p, 0.0).detuning == 0.0
    assert dc.drive_sq == pytest.approx(2 * p.laser_power * p.optical_decay / (p.hbar * p.cavity_freq))


def test_doubling_mass_doubles_tension(p):
    q = p.replace(mirror_mass=2 * p.mirror_mass)
    assert derive_constants(q).tension == 2 * derive_constants(p).tension


def test_short_beam_warns(p):
    with pytest.warns(UserWarning, match="beta"):
        derive_constants(p.replace(beam_length=0.01))


def test_default_derivation_is_silent(p):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        derive_constants(p)


def test_round_trip_reference(p):
    assert load_params(dump_params(p)) == p


@settings(max_examples=50, deadline=None)
@given(
    scale=st.floats(0.5, 2.0, allow_nan=False),
    delta=st.floats(-3.0, 3.0, allow_nan=False),
    eta=st.floats(0.0, 1.0),
)
def test_round_trip_is_bit_exact(p, scale, delta, eta):
    q = p.replace(mirror_mass=p.mirror_mass * scale, optical_decay=p.optical_decay / scale,
                  detuning_norm=delta, detection_eff=eta)
    r = load_params(dump_params(q))
    assert r == q
    assert isinstance(r, PhysicalParams)
