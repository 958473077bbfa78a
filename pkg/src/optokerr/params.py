"""Parameter records, unit normalization, and the config-file layer.

Every frequency-like quantity is stored internally in angular units
(rad/s).  The config layer owns the conversion: a value ``kappa_mhz =
1.5`` becomes ``kappa = 2*pi*1.5e6 rad/s``.  The one deliberate
exception is the Kerr strength, controlled by ``kerr_is_angular``
(see ``normalize_config``).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

from .constants import C_LIGHT, HBAR, KB, TWO_PI


class ConfigError(ValueError):
    """Base class for config validation failures; carries the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(message)


class MissingKey(ConfigError):
    def __init__(self, key: str):
        super().__init__(key, f"missing required config key '{key}'")


class NonFinite(ConfigError):
    def __init__(self, key: str, value):
        self.value = value
        super().__init__(key, f"config key '{key}' is not finite: {value!r}")


class OutOfRange(ConfigError):
    def __init__(self, key: str, message: str):
        self.detail = message
        super().__init__(key, f"config key '{key}' out of range: {message}")


@dataclass(frozen=True)
class SystemParams:
    """Fixed device constants, all rates in rad/s, wavelength in m."""

    kappa: float
    g: float
    omega_m: float
    gamma_m: float
    wavelength: float
    temperature: float

    def __post_init__(self):
        for name in ("kappa", "omega_m", "gamma_m"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise NonFinite(name, v)
            if v <= 0:
                raise OutOfRange(name, f"{name} must be positive, got {v}")
        if not math.isfinite(self.g):
            raise NonFinite("g", self.g)
        if self.g < 0:
            raise OutOfRange("g", f"g must be nonnegative, got {self.g}")
        if not math.isfinite(self.wavelength):
            raise NonFinite("wavelength", self.wavelength)
        if not (100e-9 < self.wavelength < 10e-6):
            raise OutOfRange("wavelength", f"{self.wavelength} m outside (100 nm, 10 um)")
        if not math.isfinite(self.temperature):
            raise NonFinite("temperature", self.temperature)
        if self.temperature < 0:
            raise OutOfRange("temperature", f"{self.temperature} K below 0")
        if self.g / self.kappa > 1e-3:
            warnings.warn(
                f"g/kappa = {self.g / self.kappa:.2e} > 1e-3; the linear-response "
                "treatment assumes weak dissipative coupling",
                stacklevel=2,
            )

    @property
    def omega_l(self) -> float:
        """Laser angular frequency 2*pi*c/lambda."""
        return TWO_PI * C_LIGHT / self.wavelength


@dataclass(frozen=True)
class OperatingPoint:
    """Swept knobs: drive power (W), detuning Delta (rad/s), Kerr U (rad/s)."""

    power: float
    detuning: float
    kerr: float

    def __post_init__(self):
        for name in ("power", "detuning", "kerr"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise NonFinite(name, v)
        if self.power < 0:
            raise OutOfRange("power", f"{self.power} W below 0")
        if self.kerr < 0:
            raise OutOfRange("kerr", f"{self.kerr} rad/s below 0")


@dataclass(frozen=True)
class DriveDerived:
    """Drive amplitude epsilon_l = sqrt(P/(hbar*omega_l)) and P_l = epsilon_l^2/(2*kappa)."""

    epsilon_l: float
    p_l: float


def derive_drive(params: SystemParams, point: OperatingPoint) -> DriveDerived:
    eps = math.sqrt(point.power / (HBAR * params.omega_l))
    return DriveDerived(epsilon_l=eps, p_l=eps * eps / (2.0 * params.kappa))


def thermal_occupation(omega_m: float, temperature: float) -> float:
    """Bose occupation (e^{hbar w/kB T} - 1)^-1; 0 at T=0."""
    if temperature < 0:
        raise OutOfRange("temperature", f"{temperature} K below 0")
    if temperature == 0.0:
        return 0.0
    x = HBAR * omega_m / (KB * temperature)
    return 1.0 / math.expm1(x)


# config keys, value interpretation
CONFIG_KEYS = (
    "kappa_mhz",
    "g_hz",
    "omega_m_khz",
    "gamma_m_hz",
    "wavelength_nm",
    "temperature_k",
    "power_mw",
    "detuning_over_kappa",
    "kerr_uhz",
    "kerr_is_angular",
)

_REQUIRED = tuple(k for k in CONFIG_KEYS if k != "kerr_is_angular")

# SI attribute -> config key, for error reporting at the config layer
_SI_TO_CONFIG = {
    "kappa": "kappa_mhz",
    "g": "g_hz",
    "omega_m": "omega_m_khz",
    "gamma_m": "gamma_m_hz",
    "wavelength": "wavelength_nm",
    "temperature": "temperature_k",
    "power": "power_mw",
    "detuning": "detuning_over_kappa",
    "kerr": "kerr_uhz",
}

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _as_bool(key: str, value) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in _TRUE:
        return True
    if s in _FALSE:
        return False
    raise OutOfRange(key, f"expected a boolean, got {value!r}")


def _as_float(key: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise NonFinite(key, value) from None
    if not math.isfinite(v):
        raise NonFinite(key, value)
    return v


def normalize_config(raw: dict) -> tuple[SystemParams, OperatingPoint]:
    """Convert a flat config mapping to validated parameter records.

    Hz-like values pick up the 2*pi: ``kappa_mhz = 1.5`` means
    ``kappa = 2*pi*1.5e6 rad/s``.  ``kerr_uhz`` is the exception: with
    ``kerr_is_angular = true`` (the default) the value is read as an
    angular rate in micro rad/s, ``U = kerr_uhz * 1e-6 rad/s``.  That
    default reproduces the reference cooling temperatures; set
    ``kerr_is_angular = false`` for the uniform ordinary-frequency
    reading ``U = 2*pi*kerr_uhz*1e-6 rad/s``.

    Unknown keys are rejected so typos cannot silently pass through.
    """
    for k in raw:
        if k not in CONFIG_KEYS:
            raise ConfigError(k, f"unknown config key '{k}'")
    for k in _REQUIRED:
        if k not in raw:
            raise MissingKey(k)

    vals = {k: _as_float(k, raw[k]) for k in _REQUIRED}
    kerr_is_angular = _as_bool("kerr_is_angular", raw.get("kerr_is_angular", True))

    try:
        params = SystemParams(
            kappa=TWO_PI * vals["kappa_mhz"] * 1e6,
            g=TWO_PI * vals["g_hz"],
            omega_m=TWO_PI * vals["omega_m_khz"] * 1e3,
            gamma_m=TWO_PI * vals["gamma_m_hz"],
            wavelength=vals["wavelength_nm"] * 1e-9,
            temperature=vals["temperature_k"],
        )
        kerr = vals["kerr_uhz"] * 1e-6
        if not kerr_is_angular:
            kerr *= TWO_PI
        point = OperatingPoint(
            power=vals["power_mw"] * 1e-3,
            detuning=vals["detuning_over_kappa"] * params.kappa,
            kerr=kerr,
        )
    except OutOfRange as exc:
        # report against the key the user actually wrote
        raise OutOfRange(_SI_TO_CONFIG.get(exc.key, exc.key), exc.detail) from None
    except NonFinite as exc:
        raise NonFinite(_SI_TO_CONFIG.get(exc.key, exc.key), exc.value) from None
    return params, point


def _exact_inverse(forward, target, guess):
    """Config value whose forward unit conversion reproduces target bit-for-bit.

    The naive inverse can land one ulp off after the double rounding in
    the forward map; searching a few ulps around it recovers exactness.
    """
    if forward(guess) == target:
        return guess
    for direction in (math.inf, -math.inf):
        cand = guess
        for _ in range(4):
            cand = math.nextafter(cand, direction)
            if forward(cand) == target:
                return cand
    return guess


def serialize_config(params: SystemParams, point: OperatingPoint, kerr_is_angular: bool = True) -> dict:
    """Inverse of normalize_config.

    For values that originated from a config (any preset or parsed file),
    the round trip normalize(serialize(p)) reproduces p bit for bit, so a
    sweep sidecar fed back as a config reruns byte-identically.  For SI
    values constructed directly, an exact preimage under the unit maps
    need not exist; the round trip is then within one ulp per field.
    """
    kappa_mhz = _exact_inverse(lambda v: TWO_PI * v * 1e6, params.kappa, params.kappa / TWO_PI / 1e6)
    kappa_rt = TWO_PI * kappa_mhz * 1e6
    kerr_fwd = (lambda v: v * 1e-6) if kerr_is_angular else (lambda v: TWO_PI * v * 1e-6)
    kerr_guess = point.kerr * 1e6 if kerr_is_angular else point.kerr * 1e6 / TWO_PI
    return {
        "kappa_mhz": kappa_mhz,
        "g_hz": _exact_inverse(lambda v: TWO_PI * v, params.g, params.g / TWO_PI),
        "omega_m_khz": _exact_inverse(lambda v: TWO_PI * v * 1e3, params.omega_m, params.omega_m / TWO_PI / 1e3),
        "gamma_m_hz": _exact_inverse(lambda v: TWO_PI * v, params.gamma_m, params.gamma_m / TWO_PI),
        "wavelength_nm": _exact_inverse(lambda v: v * 1e-9, params.wavelength, params.wavelength * 1e9),
        "temperature_k": params.temperature,
        "power_mw": _exact_inverse(lambda v: v * 1e-3, point.power, point.power * 1e3),
        "detuning_over_kappa": _exact_inverse(lambda v: v * kappa_rt, point.detuning, point.detuning / kappa_rt),
        "kerr_uhz": _exact_inverse(kerr_fwd, point.kerr, kerr_guess),
        "kerr_is_angular": kerr_is_angular,
    }


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("", f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(key, f"line {lineno}: empty key or value")
        out[key] = value
    return out


def load_config(path) -> dict:
    """Read a config mapping from flat ``key = value`` text or JSON.

    A sweep sidecar works directly: when the JSON document carries a
    "config" object, that object is the mapping.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except ValueError:
        return parse_config_text(text)
    if not isinstance(doc, dict):
        raise ConfigError("", f"JSON config must be an object, got {type(doc).__name__}")
    inner = doc.get("config")
    if isinstance(inner, dict):
        return inner
    return doc


# Named parameter sets from the experimental platforms the solver targets.
# Values are config-layer (Hz-like) numbers; kerr_is_angular pinned true
# because that convention reproduces the reference measurements.
PRESETS: dict[str, dict] = {
    "room_temp_membrane": {
        "kappa_mhz": 1.5,
        "g_hz": 0.1,
        "omega_m_khz": 136.0,
        "gamma_m_hz": 0.23,
        "wavelength_nm": 1064.0,
        "temperature_k": 293.0,
        "power_mw": 100.0,
        "detuning_over_kappa": 3.0,
        "kerr_uhz": 50.0,
        "kerr_is_angular": True,
    },
    "cryogenic_membrane": {
        "kappa_mhz": 1.5,
        "g_hz": 0.35,
        "omega_m_khz": 300.0,
        "gamma_m_hz": 0.1,
        "wavelength_nm": 1064.0,
        "temperature_k": 0.1,
        "power_mw": 100.0,
        "detuning_over_kappa": 0.5,
        "kerr_uhz": 16.8,
        "kerr_is_angular": True,
    },
}


def preset(name: str) -> tuple[SystemParams, OperatingPoint]:
    if name not in PRESETS:
        raise ConfigError(name, f"unknown preset '{name}'; known: {sorted(PRESETS)}")
    return normalize_config(PRESETS[name])


def with_updates(params: SystemParams, point: OperatingPoint, **kw) -> tuple[SystemParams, OperatingPoint]:
    """Return copies with the given attribute updates applied to whichever record owns them."""
    p_kw = {k: v for k, v in kw.items() if k in ("kappa", "g", "omega_m", "gamma_m", "wavelength", "temperature")}
    o_kw = {k: v for k, v in kw.items() if k in ("power", "detuning", "kerr")}
    unknown = set(kw) - set(p_kw) - set(o_kw)
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown parameter(s): {sorted(unknown)}")
    return replace(params, **p_kw), replace(point, **o_kw)
