"""Physical parameter record, config-file loading and derived constants.

All quantities are CGS.  Frequencies are stored as angular frequencies
(rad/s); the config file lists them in Hz (unless ``frequency_units`` says
otherwise) and they are multiplied by 2*pi at load time.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

TWO_PI = 2.0 * math.pi

#: Fields given in Hz in a config file and stored in rad/s.
FREQUENCY_FIELDS = (
    "optical_decay",
    "cavity_freq",
    "pendulum_freq",
    "coupling",
    "mech_decay",
    "mech_decay_rot",
    "feedback_decay",
)

#: Fields that must be strictly positive.
POSITIVE_FIELDS = (
    "laser_power",
    "optical_decay",
    "cavity_freq",
    "mirror_mass",
    "cavity_length",
    "beam_length",
    "offset",
    "pendulum_freq",
    "moment_of_inertia",
    "flexural_rigidity",
    "beam_density",
    "coupling",
    "bath_temp",
    "mech_decay",
    "mech_decay_rot",
    "feedback_decay",
    "gravity",
    "hbar",
    "k_B",
    "c",
)

PHOTON_NUMBER_MODELS = ("exact", "scaled")

SECTION = "params"


class ConfigError(ValueError):
    """Raised for any invalid, missing or unparseable parameter."""


@dataclass(frozen=True)
class PhysicalParams:
    """Full parameter record of the cavity, beam and mirror (CGS, rad/s).

    ``photon_number_model`` selects between the steady-state consistent
    photon number ``E^2/(kappa^2+Delta^2)`` ("exact") and the variant
    ``E^2/(kappa^2 (1+delta^2))`` ("scaled").
    """

    laser_power: float
    optical_decay: float
    cavity_freq: float
    detuning_norm: float
    mirror_mass: float
    cavity_length: float
    beam_length: float
    offset: float
    pendulum_freq: float
    moment_of_inertia: float
    flexural_rigidity: float
    loss_factor: float
    beam_density: float
    coupling: float
    bath_temp: float
    mech_decay: float
    mech_decay_rot: float
    feedback_decay: float
    thermal_photons: float = 0.0
    detection_eff: float = 1.0
    gravity: float = 980.0
    hbar: float = 1.05e-27
    k_B: float = 1.38e-16
    c: float = 2.998e10
    photon_number_model: str = "exact"

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "PhysicalParams":
        """Return a copy with some fields changed (re-validated)."""
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DerivedConstants:
    tension: float
    beta: float
    drive_amplitude: float
    detuning: float

    @property
    def drive_sq(self) -> float:
        return self.drive_amplitude**2


def validate(p: PhysicalParams) -> None:
    for name in POSITIVE_FIELDS:
        v = getattr(p, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise ConfigError(f"{name} must be a finite number")
        if v <= 0:
            raise ConfigError(f"{name} must be positive")
    if not math.isfinite(p.detuning_norm):
        raise ConfigError("detuning_norm must be a finite number")
    if not 0.0 <= p.detection_eff <= 1.0:
        raise ConfigError("detection_eff must lie in [0, 1]")
    if not 0.0 < p.loss_factor < 1.0:
        raise ConfigError("loss_factor must lie in (0, 1)")
    if p.thermal_photons < 0:
        raise ConfigError("thermal_photons must be non-negative")
    if p.photon_number_model not in PHOTON_NUMBER_MODELS:
        raise ConfigError(
            f"photon_number_model must be one of {PHOTON_NUMBER_MODELS}"
        )


_FIELDS = {f.name: f for f in dataclasses.fields(PhysicalParams)}
_REQUIRED = [
    f.name
    for f in dataclasses.fields(PhysicalParams)
    if f.default is dataclasses.MISSING
]
# Keys that fall back silently to their default.  detection_eff is absent on
# purpose: omitting it applies 1.0 but warns.
_QUIET_DEFAULTS = {"thermal_photons", "gravity", "hbar", "k_B", "c",
                   "photon_number_model"}


def load_params(config_text: str) -> PhysicalParams:
    """Parse an INI-style ``[params]`` document into :class:`PhysicalParams`.

    Parameters
    ----------
    config_text : str
        Text of the config document.  Keys are the field names of
        :class:`PhysicalParams`.  The optional key ``frequency_units``
        (``hz`` or ``rad/s``, default ``hz``) states how the frequency
        fields are written.

    Returns
    -------
    PhysicalParams

    Raises
    ------
    ConfigError
        On a missing key, an unknown key, an unparseable value or a value
        outside its allowed range.  The message names the offending key.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (k_B)
    try:
        parser.read_string(config_text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not parser.has_section(SECTION):
        raise ConfigError(f"config lacks a [{SECTION}] section")
    extra = [s for s in parser.sections() if s != SECTION]
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(extra)}")

    raw = dict(parser.items(SECTION))
    units = raw.pop("frequency_units", "hz").strip().lower()
    if units not in ("hz", "rad/s"):
        raise ConfigError("frequency_units must be 'hz' or 'rad/s'")

    unknown = sorted(set(raw) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    values = {}
    for key, text in raw.items():
        if key == "photon_number_model":
            values[key] = text.strip()
            continue
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse value {text!r}") from None
        if units == "hz" and key in FREQUENCY_FIELDS:
            v *= TWO_PI
        values[key] = v

    if "detection_eff" not in values:
        warnings.warn(
            "detection_eff not given; using the default 1.0",
            stacklevel=2,
        )
    return PhysicalParams(**values)


def load_params_file(path: str | Path) -> PhysicalParams:
    return load_params(Path(path).read_text(encoding="utf-8"))


def dump_params(p: PhysicalParams) -> str:
    """Serialize to a config document that reloads to identical values.

    Frequencies are written in rad/s with ``repr`` precision so the round
    trip is bit exact.
    """
    lines = [f"[{SECTION}]", "frequency_units = rad/s"]
    for f in dataclasses.fields(p):
        v = getattr(p, f.name)
        lines.append(f"{f.name} = {v if isinstance(v, str) else repr(float(v))}")
    return "\n".join(lines) + "\n"


def table1_path() -> Path:
    """Path of the shipped Table I config."""
    return Path(__file__).with_name("table1.cfg")


def table1() -> PhysicalParams:
    """The reference parameter set shipped with the package."""
    return load_params_file(table1_path())


def derive_constants(p: PhysicalParams, delta: float | None = None) -> DerivedConstants:
    """Tension, beam constant, drive amplitude and detuning.

    Parameters
    ----------
    p : PhysicalParams
    delta : float, optional
        Normalized detuning; defaults to ``p.detuning_norm``.

    Notes
    -----
    ``T = M g``, ``beta = sqrt(T/EI)``, ``|E|^2 = 2 P kappa/(hbar w0)``
    and ``Delta = -2 kappa delta``.  A warning is emitted when
    ``beta*l < 100`` because the steady-state approximations then degrade.
    """
    if delta is None:
        delta = p.detuning_norm
    T = p.mirror_mass * p.gravity
    beta = math.sqrt(T / p.flexural_rigidity)
    if beta * p.beam_length < 100:
        warnings.warn(
            f"beta*l = {beta * p.beam_length:.3g} < 100; thin-beam "
            "approximations are inaccurate",
            stacklevel=2,
        )
    drive = math.sqrt(2 * p.laser_power * p.optical_decay / (p.hbar * p.cavity_freq))
    return DerivedConstants(
        tension=T,
        beta=beta,
        drive_amplitude=drive,
        detuning=-2.0 * p.optical_decay * delta,
    )
