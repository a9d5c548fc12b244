"""Declarative scenario configuration: typed sections, defaults and validation.

A scenario document is a nested key-value mapping (YAML on disk).  Unknown keys
are rejected and every domain violation names the offending field path, so a
config either loads into a fully-populated :class:`ScenarioConfig` or fails
loudly.  Identical configs plus the same seed give bit-identical runs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from typing import Any, Mapping

__all__ = [
    "ConfigError",
    "DetectorSettings",
    "ChannelSettings",
    "BackflashSettings",
    "TrojanSettings",
    "BlindingSettings",
    "AttackSettings",
    "WatchdogSettings",
    "MonitorSettings",
    "CountermeasureSettings",
    "ScenarioConfig",
]

PROTOCOLS = ("dps", "cow")
ATTACK_KINDS = ("none", "backflash", "trojan", "blinding")
FSG_POLICIES = ("canonical", "worked-example")
BLINDING_STYLES = ("cw", "pulsed")


class ConfigError(ValueError):
    """Configuration rejected; the message carries the offending field path."""


def _require_int(value, path: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: must be an integer, got {value!r}")


@dataclass(frozen=True)
class DetectorSettings:
    """Bob's detector parameters.

    ``click_threshold_rel`` scales the Geiger threshold relative to the nominal
    interference intensity of each line.  The ``p_*`` pairs are the linear-mode
    rails: the plain pair serves DPS detectors, the ``_b``/``_m`` pairs the COW
    data and monitoring detectors.
    """

    click_threshold_rel: float = 0.5
    dead_time_slots: int = 0
    afterpulse_prob: float = 0.0
    dark_count_prob: float = 0.0
    p_never: float = 0.2
    p_always: float = 0.39
    p_never_b: float = 0.392
    p_always_b: float = 0.398
    p_never_m: float = 0.2
    p_always_m: float = 0.39

    def validate(self, path: str) -> None:
        if not (0.0 < self.click_threshold_rel < 1.0):
            raise ConfigError(f"{path}.click_threshold_rel: must be within (0, 1), got {self.click_threshold_rel}")
        _require_int(self.dead_time_slots, f"{path}.dead_time_slots")
        if self.dead_time_slots < 0:
            raise ConfigError(f"{path}.dead_time_slots: must be >= 0, got {self.dead_time_slots}")
        for name in ("afterpulse_prob", "dark_count_prob"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{path}.{name}: must be within [0, 1], got {v}")
        for suffix in ("", "_b", "_m"):
            lo = getattr(self, f"p_never{suffix}")
            hi = getattr(self, f"p_always{suffix}")
            if not (0.0 <= lo < hi):
                raise ConfigError(f"{path}.p_never{suffix}/p_always{suffix}: need 0 <= p_never < p_always, got {lo}, {hi}")


@dataclass(frozen=True)
class ChannelSettings:
    """Quantum-channel effects between the modules.

    ``phase_tamper_half_turns`` is an in-channel phase modulator profile in
    units of pi, applied per grid slot from slot 0.  ``excess_loss_db`` maps a
    wavelength to extra one-way loss relative to the signal band.
    ``bob_filter_extinction_db`` is Bob's entrance bandpass filter (infinite by
    default, i.e. only the signal wavelength reaches his detectors).
    """

    phase_tamper_half_turns: tuple[float, ...] | None = None
    excess_loss_db: tuple[tuple[float, float], ...] = ((1924.0, 20.0),)
    bob_filter_extinction_db: float = math.inf

    def validate(self, path: str) -> None:
        if self.phase_tamper_half_turns is not None:
            for i, v in enumerate(self.phase_tamper_half_turns):
                if not math.isfinite(v):
                    raise ConfigError(f"{path}.phase_tamper_half_turns[{i}]: must be finite")
        for nm, db in self.excess_loss_db:
            if nm <= 0 or db < 0:
                raise ConfigError(f"{path}.excess_loss_db[{nm}]: wavelength must be > 0 and loss >= 0 dB")
        if self.bob_filter_extinction_db < 0:
            raise ConfigError(f"{path}.bob_filter_extinction_db: must be >= 0 dB")

    def excess_loss_for(self, wavelength: float) -> float:
        for nm, db in self.excess_loss_db:
            if nm == wavelength:
                return db
        return 0.0


@dataclass(frozen=True)
class BackflashSettings:
    electrons_per_avalanche: float = 2.7e8
    photons_per_electron: float = 2.4e-10
    ideal: bool = False
    emission_gain: float = 1.0

    def validate(self, path: str) -> None:
        if self.electrons_per_avalanche < 0 or self.photons_per_electron < 0:
            raise ConfigError(f"{path}: avalanche constants must be >= 0")
        if self.emission_gain < 0:
            raise ConfigError(f"{path}.emission_gain: must be >= 0")


@dataclass(frozen=True)
class TrojanSettings:
    probe_wavelength_nm: float = 1000.0
    probe_amplitude: float = 1.0
    timing_offset_slots: int = 0
    reflection_db: float = 0.0
    eve_min_intensity: float = 1e-15

    def validate(self, path: str) -> None:
        _require_int(self.timing_offset_slots, f"{path}.timing_offset_slots")
        if self.probe_wavelength_nm <= 0:
            raise ConfigError(f"{path}.probe_wavelength_nm: must be > 0, got {self.probe_wavelength_nm}")
        if self.probe_amplitude <= 0:
            raise ConfigError(f"{path}.probe_amplitude: must be > 0, got {self.probe_amplitude}")
        if self.reflection_db < 0:
            raise ConfigError(f"{path}.reflection_db: must be >= 0, got {self.reflection_db}")
        if self.eve_min_intensity < 0:
            raise ConfigError(f"{path}.eve_min_intensity: must be >= 0")


@dataclass(frozen=True)
class BlindingSettings:
    """Faked-state attack parameters.

    ``readings`` pins the detection sequence Eve replays; when absent the run
    derives it by measuring Alice's train with Eve's replica of Bob.  The
    illumination keeps Bob's detectors in linear mode: ``cw`` shines
    ``illumination_level`` every slot, ``pulsed`` delivers the same energy once
    per ``pulse_period_slots``.
    """

    readings: tuple[int, ...] | None = None
    policy: str = "canonical"
    style: str = "pulsed"
    illumination_level: float = 20.0
    pulse_period_slots: int = 8
    decay_per_slot: float = 0.8
    blind_threshold: float = 4.0

    def validate(self, path: str) -> None:
        if self.policy not in FSG_POLICIES:
            raise ConfigError(f"{path}.policy: must be one of {FSG_POLICIES}, got {self.policy!r}")
        if self.style not in BLINDING_STYLES:
            raise ConfigError(f"{path}.style: must be one of {BLINDING_STYLES}, got {self.style!r}")
        if self.illumination_level <= 0:
            raise ConfigError(f"{path}.illumination_level: must be > 0")
        _require_int(self.pulse_period_slots, f"{path}.pulse_period_slots")
        if self.pulse_period_slots < 1:
            raise ConfigError(f"{path}.pulse_period_slots: must be >= 1")
        if not (0.0 < self.decay_per_slot < 1.0):
            raise ConfigError(f"{path}.decay_per_slot: must be within (0, 1)")
        if self.blind_threshold <= 0:
            raise ConfigError(f"{path}.blind_threshold: must be > 0")
        if self.readings is not None:
            if not self.readings:
                raise ConfigError(f"{path}.readings: must be nonempty when given")
            for i, r in enumerate(self.readings):
                if r not in (0, 1, 2, 3):
                    raise ConfigError(f"{path}.readings[{i}]: must be 0..3, got {r}")


@dataclass(frozen=True)
class AttackSettings:
    kind: str = "none"
    backflash: BackflashSettings = field(default_factory=BackflashSettings)
    trojan: TrojanSettings = field(default_factory=TrojanSettings)
    blinding: BlindingSettings = field(default_factory=BlindingSettings)

    def validate(self, path: str) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"{path}.kind: must be one of {ATTACK_KINDS}, got {self.kind!r}")
        self.backflash.validate(f"{path}.backflash")
        self.trojan.validate(f"{path}.trojan")
        self.blinding.validate(f"{path}.blinding")


@dataclass(frozen=True)
class WatchdogSettings:
    enabled: bool = False
    tap_fraction: float = 0.1
    intensity_threshold: float = 0.05

    def validate(self, path: str) -> None:
        if not (0.0 < self.tap_fraction < 1.0):
            raise ConfigError(f"{path}.tap_fraction: must be within (0, 1), got {self.tap_fraction}")
        if self.intensity_threshold < 0:
            raise ConfigError(f"{path}.intensity_threshold: must be >= 0")


@dataclass(frozen=True)
class MonitorSettings:
    enabled: bool = False
    window_slots: int = 8
    alarm_threshold: float = 40.0

    def validate(self, path: str) -> None:
        _require_int(self.window_slots, f"{path}.window_slots")
        if self.window_slots < 1:
            raise ConfigError(f"{path}.window_slots: must be >= 1, got {self.window_slots}")
        if self.alarm_threshold < 0:
            raise ConfigError(f"{path}.alarm_threshold: must be >= 0")


@dataclass(frozen=True)
class CountermeasureSettings:
    watchdog: WatchdogSettings = field(default_factory=WatchdogSettings)
    photocurrent_monitor: MonitorSettings = field(default_factory=MonitorSettings)

    def validate(self, path: str) -> None:
        self.watchdog.validate(f"{path}.watchdog")
        self.photocurrent_monitor.validate(f"{path}.photocurrent_monitor")


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully-specified run: protocol, parameters, attack and countermeasures."""

    protocol: str = "dps"
    n_symbols: int = 128
    seed: int = 1
    amplitude: float = 1.0
    wavelength_nm: float = 1550.0
    slot_period_s: float | None = None
    t_b: float = 0.9
    bits: tuple[int, ...] | None = None
    symbols: str | None = None
    detector: DetectorSettings = field(default_factory=DetectorSettings)
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    attack: AttackSettings = field(default_factory=AttackSettings)
    countermeasures: CountermeasureSettings = field(default_factory=CountermeasureSettings)
    golden_name: str | None = None

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol: must be one of {PROTOCOLS}, got {self.protocol!r}")
        _require_int(self.n_symbols, "n_symbols")
        if self.n_symbols < 2:
            raise ConfigError(f"n_symbols: must be >= 2, got {self.n_symbols}")
        _require_int(self.seed, "seed")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed}")
        if self.amplitude <= 0:
            raise ConfigError(f"amplitude: must be > 0, got {self.amplitude}")
        if self.wavelength_nm <= 0:
            raise ConfigError(f"wavelength_nm: must be > 0, got {self.wavelength_nm}")
        if self.slot_period_s is not None and self.slot_period_s <= 0:
            raise ConfigError(f"slot_period_s: must be > 0, got {self.slot_period_s}")
        if not (0.0 < self.t_b < 1.0):
            raise ConfigError(f"t_b: must be within (0, 1), got {self.t_b}")
        if self.bits is not None:
            if len(self.bits) < 2:
                raise ConfigError("bits: need at least two")
            for i, b in enumerate(self.bits):
                if b not in (0, 1):
                    raise ConfigError(f"bits[{i}]: must be 0 or 1, got {b}")
        if self.symbols is not None:
            if not self.symbols:
                raise ConfigError("symbols: must be nonempty when given")
            bad = set(self.symbols) - {"0", "1", "d"}
            if bad:
                raise ConfigError(f"symbols: invalid entries {sorted(bad)}; allowed: 0, 1, d")
        self.detector.validate("detector")
        self.channel.validate("channel")
        self.attack.validate("attack")
        self.countermeasures.validate("countermeasures")
        if self.attack.kind == "trojan" and self.attack.trojan.probe_wavelength_nm == self.wavelength_nm:
            raise ConfigError("attack.trojan.probe_wavelength_nm: probe must differ from the signal wavelength")
        if self.attack.kind == "blinding" and self.attack.blinding.readings is not None:
            allowed = (0, 1, 2) if self.protocol == "dps" else (0, 1, 2, 3)
            for i, r in enumerate(self.attack.blinding.readings):
                if r not in allowed:
                    raise ConfigError(
                        f"attack.blinding.readings[{i}]: must be in {allowed} for {self.protocol}, got {r}"
                    )

    @property
    def slot_period(self) -> float:
        if self.slot_period_s is not None:
            return self.slot_period_s
        return 1.0 if self.protocol == "dps" else 0.5

    def to_dict(self) -> dict[str, Any]:
        """Canonical plain-data snapshot (defaults materialised, tuples as lists)."""
        return _plain(self)


# ---------------------------------------------------------------------------
# dict <-> dataclass plumbing
# ---------------------------------------------------------------------------


def _plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


_SECTION_TYPES = {
    DetectorSettings,
    ChannelSettings,
    BackflashSettings,
    TrojanSettings,
    BlindingSettings,
    AttackSettings,
    WatchdogSettings,
    MonitorSettings,
    CountermeasureSettings,
}


def _coerce(value: Any, f: dataclasses.Field, path: str) -> Any:
    target = f.type
    if value is None:
        return None
    for section in _SECTION_TYPES:
        if target == section.__name__ or target is section:
            if not isinstance(value, Mapping):
                raise ConfigError(f"{path}: expected a mapping")
            return _from_mapping(section, value, path)
    if f.name == "excess_loss_db":
        if isinstance(value, Mapping):
            pairs = tuple(sorted((float(k), float(v)) for k, v in value.items()))
        else:
            pairs = tuple((float(k), float(v)) for k, v in value)
        return pairs
    if isinstance(value, str) and value.lower() in ("inf", ".inf", "infinity"):
        return math.inf
    if isinstance(value, list):
        if f.name == "symbols":
            return "".join(str(v) for v in value)
        if f.name in ("bits", "readings"):
            return tuple(int(v) for v in value)
        return tuple(float(v) for v in value)
    return value


def _from_mapping(cls: type, data: Mapping[str, Any], path: str = "") -> Any:
    known = {f.name: f for f in fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown key (allowed: {', '.join(sorted(known))})")
        where = f"{path}.{key}" if path else key
        try:
            kwargs[key] = _coerce(value, known[key], where)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}: {exc}") from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path or cls.__name__}: {exc}") from exc


def scenario_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    """Build and validate a config from a plain mapping; unknown keys rejected."""
    if not isinstance(data, Mapping):
        raise ConfigError("scenario document must be a mapping")
    cfg = _from_mapping(ScenarioConfig, data)
    try:
        cfg.validate()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:  # malformed value of an unexpected shape
        raise ConfigError(str(exc)) from exc
    return cfg
