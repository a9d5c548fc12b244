"""Seeded deterministic execution of scenario configs into run records.

``run_scenario`` builds the component graph for the configured protocol and
attack and evaluates it slot-synchronously: whole-train transforms in dataflow
order, with the reverse paths of the probe and backflash attacks handled as a
second backward pass.  Every random draw comes from a named substream of the
run seed, so adding a consumer never perturbs the others and re-running a
config reproduces every byte.
"""

from __future__ import annotations

import hashlib
import json
import time
import zlib
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np
import yaml

from .attacks import (
    AttackOutcome,
    BlindingThresholds,
    blinding_feasible,
    capture_fraction,
    decode_cow_readings,
    decode_dps_readings,
    fsg_cow_drive,
    fsg_dps_phases,
    trojan_decode,
    trojan_probe,
)
from .config import ConfigError, ScenarioConfig, scenario_from_dict
from .detectors import (
    ApdConfig,
    BackflashConfig,
    BlindingState,
    DetectionRecord,
    DetectorTrace,
    apd_detect,
    backflash_emit,
    photocurrent_monitor,
    watchdog,
)
from .goldens import golden_config_dict
from .optics import (
    CouplerRatio,
    PulseTrain,
    circulator,
    coupler_2x2,
    cw_laser,
    dli,
    optical_filter,
    phase_modulator,
    select_channel,
)
from .protocols import (
    COW_SYMBOLS,
    CowMeasurement,
    ProtocolRun,
    VisibilityReport,
    cow_encode,
    cow_occupancy,
    cow_sift,
    dps_encode,
    dps_reference_bits,
    dps_sift,
    visibility,
)

__all__ = [
    "RngFactory",
    "RunRecord",
    "load_config",
    "run_scenario",
    "run_golden",
    "sweep",
    "derive_sweep_seed",
]


class RngFactory:
    """Named deterministic substreams of one run seed.

    Each consumer asks for its stream by name; the stream is derived from
    ``(seed, crc32(name))`` so the set of consumers can grow without
    perturbing anyone else's draws.
    """

    def __init__(self, seed: int):
        self._seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            key = zlib.crc32(name.encode("utf-8"))
            ss = np.random.SeedSequence(entropy=self._seed, spawn_key=(key,))
            self._streams[name] = np.random.default_rng(ss)
        return self._streams[name]


def derive_sweep_seed(base_seed: int, index: int) -> int:
    """Deterministic per-point seed of a parameter sweep."""
    state = np.random.SeedSequence(entropy=[int(base_seed), int(index)]).generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])


# ---------------------------------------------------------------------------
# Pipeline execution
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _Pipeline:
    """One executed receive chain: the assembled run plus the field incident at
    each detector (needed by the backflash reverse pass)."""

    run: ProtocolRun
    ports: dict[str, PulseTrain]
    bob_input: PulseTrain


def _alice_material(cfg: ScenarioConfig, rngs: RngFactory) -> tuple[np.ndarray | None, str | None]:
    if cfg.protocol == "dps":
        if cfg.bits is not None:
            return np.array(cfg.bits, dtype=np.int64), None
        return rngs.get("alice-source").integers(0, 2, cfg.n_symbols).astype(np.int64), None
    if cfg.symbols is not None:
        return None, cfg.symbols
    idx = rngs.get("alice-source").integers(0, 3, cfg.n_symbols)
    return None, "".join(COW_SYMBOLS[i] for i in idx)


def _apply_channel(cfg: ScenarioConfig, train: PulseTrain) -> PulseTrain:
    pattern = cfg.channel.phase_tamper_half_turns
    if pattern is None:
        return train
    phases = np.zeros(len(train), dtype=np.float64)
    m = min(len(train), len(pattern))
    phases[:m] = np.asarray(pattern[:m], dtype=np.float64) * np.pi
    return phase_modulator(train, phases)


def _dps_apd_cfg(cfg: ScenarioConfig) -> ApdConfig:
    d = cfg.detector
    return ApdConfig(
        mode="geiger",
        click_threshold=d.click_threshold_rel * cfg.amplitude**2,
        p_never=d.p_never,
        p_always=d.p_always,
        dead_time_slots=d.dead_time_slots,
        afterpulse_prob=d.afterpulse_prob,
        dark_count_prob=d.dark_count_prob,
    )


def _cow_apd_cfgs(cfg: ScenarioConfig) -> tuple[ApdConfig, ApdConfig]:
    d = cfg.detector
    nominal = cfg.amplitude**2
    data = ApdConfig(
        mode="geiger",
        click_threshold=d.click_threshold_rel * cfg.t_b * nominal,
        p_never=d.p_never_b,
        p_always=d.p_always_b,
        dead_time_slots=d.dead_time_slots,
        afterpulse_prob=d.afterpulse_prob,
        dark_count_prob=d.dark_count_prob,
    )
    monitor = ApdConfig(
        mode="geiger",
        click_threshold=d.click_threshold_rel * (1.0 - cfg.t_b) * nominal,
        p_never=d.p_never_m,
        p_always=d.p_always_m,
        dead_time_slots=d.dead_time_slots,
        afterpulse_prob=d.afterpulse_prob,
        dark_count_prob=d.dark_count_prob,
    )
    return data, monitor


def _execute_protocol(
    cfg: ScenarioConfig,
    alice_bits: np.ndarray | None,
    alice_symbols: str | None,
    rngs: RngFactory,
) -> _Pipeline:
    """Encode, traverse the channel, measure and sift one clean pipeline."""
    if cfg.protocol == "dps":
        train = dps_encode(alice_bits, cfg.amplitude, cfg.slot_period, cfg.wavelength_nm)
        train = _apply_channel(cfg, train)
        apd = _dps_apd_cfg(cfg)
        constructive, destructive = dli(train, 1)
        d1 = apd_detect(constructive, apd, "D1", rng=rngs.get("bob-D1"))
        d2 = apd_detect(destructive, apd, "D2", rng=rngs.get("bob-D2"))
        record = DetectionRecord.merged(d1, d2)
        km = dps_sift(alice_bits, record)
        run = ProtocolRun(
            protocol="dps",
            alice_bits=alice_bits,
            alice_symbols=None,
            record=record,
            sifted_alice=km.sifted_alice,
            sifted_bob=km.sifted_bob,
            sifted_slots=km.sifted_slots,
            qber=km.qber,
        )
        return _Pipeline(run, {"D1": constructive, "D2": destructive}, train)

    train = cow_encode(alice_symbols, cfg.amplitude, cfg.slot_period, cfg.wavelength_nm)
    train = _apply_channel(cfg, train)
    data_cfg, monitor_cfg = _cow_apd_cfgs(cfg)
    data_line, monitor_line = coupler_2x2(train, train.vacuum_like(), CouplerRatio(cfg.t_b))
    data = apd_detect(data_line, data_cfg, "D_B", rng=rngs.get("bob-D_B"))
    constructive, destructive = dli(monitor_line, 1)
    m1 = apd_detect(constructive, monitor_cfg, "D_M1", rng=rngs.get("bob-D_M1"))
    m2 = apd_detect(destructive, monitor_cfg, "D_M2", rng=rngs.get("bob-D_M2"))
    monitor = DetectionRecord.merged(m1, m2)
    report = visibility(monitor, alice_symbols)
    km = cow_sift(alice_symbols, data, report)
    record = DetectionRecord.merged(data, monitor)
    run = ProtocolRun(
        protocol="cow",
        alice_bits=None,
        alice_symbols=alice_symbols,
        record=record,
        sifted_alice=km.sifted_alice,
        sifted_bob=km.sifted_bob,
        sifted_slots=km.sifted_symbols,
        qber=km.qber,
        visibility_report=report,
    )
    ports = {"D_B": data_line, "D_M1": constructive, "D_M2": destructive}
    return _Pipeline(run, ports, train)


# ---------------------------------------------------------------------------
# Attack orchestration
# ---------------------------------------------------------------------------


def _run_backflash(cfg: ScenarioConfig, rngs: RngFactory, pipe: _Pipeline) -> AttackOutcome:
    """Reverse pass: re-emission from Bob's clicked detectors, routed to Eve by
    the channel circulator, decoded with her replica of the corresponding
    detector."""
    s = cfg.attack.backflash
    bf = BackflashConfig(
        electrons_per_avalanche=s.electrons_per_avalanche,
        photons_per_electron=s.photons_per_electron,
        ideal_mode=s.ideal,
        emission_gain=s.emission_gain,
    )
    run = pipe.run
    gain2 = bf.emission_gain**2

    def eve_detect(detector: str, threshold: float) -> DetectorTrace:
        emission = backflash_emit(
            DetectionRecord.single(detector, run.record[detector], cfg.slot_period),
            pipe.ports[detector],
            bf,
            rng=rngs.get(f"backflash-{detector}"),
        )
        _, _, toward_eve = circulator(port2_in=emission)
        cfg_eve = ApdConfig(mode="geiger", click_threshold=threshold)
        rec = apd_detect(toward_eve, cfg_eve, f"EVE_{detector}", rng=rngs.get(f"eve-{detector}"))
        return rec[f"EVE_{detector}"]

    rel = cfg.detector.click_threshold_rel
    nominal = cfg.amplitude**2
    if cfg.protocol == "dps":
        eve_d1 = eve_detect("D1", rel * gain2 * nominal)
        eve_d2 = eve_detect("D2", rel * gain2 * nominal)
        one = np.logical_xor(eve_d1.clicks, eve_d2.clicks)
        eve_slots = np.nonzero(one)[0]
        eve_bits = eve_d2.clicks[eve_slots].astype(np.int64)
    else:
        eve_db = eve_detect("D_B", rel * gain2 * cfg.t_b * nominal)
        sym = run.alice_symbols
        eve_slots_list: list[int] = []
        eve_bits_list: list[int] = []
        for i, s_i in enumerate(sym):
            if s_i == "d":
                continue
            early, late = bool(eve_db.clicks[2 * i]), bool(eve_db.clicks[2 * i + 1])
            if early != late:
                eve_slots_list.append(i)
                eve_bits_list.append(int(late))
        eve_slots = np.array(eve_slots_list, dtype=np.int64)
        eve_bits = np.array(eve_bits_list, dtype=np.int64)

    frac = capture_fraction(run.sifted_slots, run.sifted_bob, eve_slots, eve_bits)
    return AttackOutcome(
        attack="backflash",
        eve_key=eve_bits,
        bob_key=run.sifted_bob,
        capture_fraction=frac,
        induced_qber=0.0,
        induced_visibility_drop=0.0 if cfg.protocol == "cow" else None,
    )


def _run_trojan(cfg: ScenarioConfig, rngs: RngFactory, pipe: _Pipeline) -> AttackOutcome:
    """Backward probe pass: watchdog tap at Alice's entrance, reflection off her
    modulator, wavelength separation and Eve's replica decode.  The forward
    signal is untouched; Bob's entrance filter keeps the probe band away from
    his detectors."""
    s = cfg.attack.trojan
    run = pipe.run
    n_slots = len(pipe.bob_input)
    probe_in = cw_laser(n_slots, s.probe_amplitude, s.probe_wavelength_nm, cfg.slot_period)

    wd_alarm = False
    probe_amplitude = s.probe_amplitude
    cm = cfg.countermeasures.watchdog
    if cm.enabled:
        wd = watchdog(probe_in, cm.tap_fraction, cm.intensity_threshold)
        wd_alarm = wd.alarm
        probe_amplitude = s.probe_amplitude * float(np.sqrt(1.0 - cm.tap_fraction))

    if cfg.protocol == "dps":
        modulation: Sequence[int] = run.alice_bits
    else:
        modulation = cow_occupancy(run.alice_symbols)
    probe_cfg = s if probe_amplitude == s.probe_amplitude else replace(s, probe_amplitude=probe_amplitude)
    reflected = trojan_probe(
        cfg.protocol,
        modulation,
        probe_cfg,
        cfg.slot_period,
        excess_loss_db=cfg.channel.excess_loss_for(s.probe_wavelength_nm),
        signal_wavelength=cfg.wavelength_nm,
    )
    # Both bands co-propagate back up Alice's output fiber; Eve's bandpass
    # filter strips the signal band and keeps the probe band for her decoder.
    channels = optical_filter([pipe.bob_input, reflected], s.probe_wavelength_nm)
    eve_channel = select_channel(channels, s.probe_wavelength_nm)

    if cfg.protocol == "dps":
        decoded = trojan_decode(eve_channel, "dps", s.eve_min_intensity)
        eve_slots = np.nonzero(decoded >= 0)[0] + 1
        eve_bits = decoded[decoded >= 0].astype(np.int64)
    else:
        sym = trojan_decode(eve_channel, "cow", s.eve_min_intensity)
        eve_slots_list: list[int] = []
        eve_bits_list: list[int] = []
        decoys = {i for i, c in enumerate(run.alice_symbols) if c == "d"}
        for i, c in enumerate(sym):
            if i in decoys or c not in ("0", "1"):
                continue
            eve_slots_list.append(i)
            eve_bits_list.append(int(c))
        eve_slots = np.array(eve_slots_list, dtype=np.int64)
        eve_bits = np.array(eve_bits_list, dtype=np.int64)

    frac = capture_fraction(run.sifted_slots, run.sifted_bob, eve_slots, eve_bits)
    return AttackOutcome(
        attack="trojan",
        eve_key=eve_bits,
        bob_key=run.sifted_bob,
        capture_fraction=frac,
        induced_qber=0.0,
        induced_visibility_drop=0.0 if cfg.protocol == "cow" else None,
        alarms={"watchdog": wd_alarm, "photocurrent_monitor": False},
    )


def _blinding_background(style: str, level: float, period: int, n_slots: int) -> np.ndarray:
    if style == "cw":
        return np.full(n_slots, level, dtype=np.float64)
    bg = np.zeros(n_slots, dtype=np.float64)
    bg[::period] = level
    return bg


def _run_blinding(
    cfg: ScenarioConfig,
    rngs: RngFactory,
    pipe: _Pipeline,
) -> tuple[ProtocolRun, AttackOutcome]:
    """Three stages: Eve's replica measurement (or pinned readings), the
    faked-state plan, and the replay into Bob's blinded detectors with the
    photocurrent monitor watching."""
    s = cfg.attack.blinding
    th = BlindingThresholds.from_detector_settings(cfg.detector)
    clean = pipe.run

    if s.readings is not None:
        readings = list(s.readings)
        derived = False
    else:
        derived = True
        if cfg.protocol == "dps":
            apd = _dps_apd_cfg(cfg)
            c, d = dli(pipe.bob_input, 1)
            e1 = apd_detect(c, apd, "D1", rng=rngs.get("eve-stage1-D1"))
            e2 = apd_detect(d, apd, "D2", rng=rngs.get("eve-stage1-D2"))
            readings = decode_dps_readings(DetectionRecord.merged(e1, e2), 0, len(pipe.bob_input) + 1)
        else:
            data_cfg, monitor_cfg = _cow_apd_cfgs(cfg)
            data_line, monitor_line = coupler_2x2(pipe.bob_input, pipe.bob_input.vacuum_like(), CouplerRatio(cfg.t_b))
            eb = apd_detect(data_line, data_cfg, "D_B", rng=rngs.get("eve-stage1-D_B"))
            c, d = dli(monitor_line, 1)
            em1 = apd_detect(c, monitor_cfg, "D_M1", rng=rngs.get("eve-stage1-D_M1"))
            em2 = apd_detect(d, monitor_cfg, "D_M2", rng=rngs.get("eve-stage1-D_M2"))
            meas = CowMeasurement(data=eb, monitor=DetectionRecord.merged(em1, em2))
            readings = decode_cow_readings(meas, 0, len(pipe.bob_input) + 1)

    if cfg.protocol == "dps":
        plan = fsg_dps_phases(readings, s.policy, launch_intensity=th.p_always)
        feasibility = {"rail_gap": th.p_always < 2.0 * th.p_never}
    else:
        plan = fsg_cow_drive(readings, cfg.t_b, th, allow_infeasible=True)
        feasibility = blinding_feasible(th, cfg.t_b).as_dict()

    trigger = plan.to_train(cfg.slot_period, cfg.wavelength_nm)
    blind = BlindingState(0.0, s.decay_per_slot, s.blind_threshold)

    def blinded_detect(train: PulseTrain, apd: ApdConfig, name: str) -> DetectionRecord:
        bg = _blinding_background(s.style, s.illumination_level, s.pulse_period_slots, len(train))
        return apd_detect(train, apd, name, blind=blind, background=bg, rng=rngs.get(f"bob-{name}"))

    if cfg.protocol == "dps":
        apd = _dps_apd_cfg(cfg)
        c, d = dli(trigger, 1)
        d1 = blinded_detect(c, apd, "D1")
        d2 = blinded_detect(d, apd, "D2")
        record = DetectionRecord.merged(d1, d2)
        bob_readings = decode_dps_readings(record, plan.readings_slot_offset, len(readings))
    else:
        data_cfg, monitor_cfg = _cow_apd_cfgs(cfg)
        data_line, monitor_line = coupler_2x2(trigger, trigger.vacuum_like(), CouplerRatio(cfg.t_b))
        db = blinded_detect(data_line, data_cfg, "D_B")
        c, d = dli(monitor_line, 1)
        m1 = blinded_detect(c, monitor_cfg, "D_M1")
        m2 = blinded_detect(d, monitor_cfg, "D_M2")
        record = DetectionRecord.merged(db, m1, m2)
        bob_readings = decode_cow_readings(
            CowMeasurement(data=db, monitor=DetectionRecord.merged(m1, m2)),
            plan.readings_slot_offset,
            len(readings),
        )

    monitor_alarm = False
    cm = cfg.countermeasures.photocurrent_monitor
    if cm.enabled:
        for name in record.names:
            result = photocurrent_monitor(record[name].photocurrent, cm.window_slots, cm.alarm_threshold)
            monitor_alarm = monitor_alarm or result.alarm

    # Keys follow the monitoring-detector readings (bit 0 constructive, bit 1
    # destructive for DPS); COW detector control is judged on record equality.
    if cfg.protocol == "dps":
        eve_idx = [j for j, r in enumerate(readings) if r in (1, 2)]
        eve_bits = np.array([readings[j] - 1 for j in eve_idx], dtype=np.int64)
        bob_idx = [j for j, r in enumerate(bob_readings) if r in (1, 2)]
        bob_bits = np.array([bob_readings[j] - 1 for j in bob_idx], dtype=np.int64)
    else:
        eve_idx = [j for j, r in enumerate(readings) if r == 3]
        eve_bits = np.array([1] * len(eve_idx), dtype=np.int64)
        bob_idx = [j for j, r in enumerate(bob_readings) if r == 3]
        bob_bits = np.array([1] * len(bob_idx), dtype=np.int64)

    frac = capture_fraction(
        np.array(bob_idx, dtype=np.int64), bob_bits, np.array(eve_idx, dtype=np.int64), eve_bits
    )

    if derived and cfg.protocol == "dps":
        # Bob's sifted bits map back to Alice's key stream through Eve's
        # faithful replica measurement: reading j sits at his slot j + offset
        # and carries Alice's difference bit j - 1.
        diff = dps_reference_bits(clean.alice_bits)
        sifted_alice = np.array([diff[j - 1] for j in bob_idx if 1 <= j <= diff.size], dtype=np.int64)
        qber = float(np.mean(sifted_alice != bob_bits[: sifted_alice.size])) if sifted_alice.size else 0.0
        run_alice = sifted_alice
        run_qber = qber
    else:
        run_alice = np.array([], dtype=np.int64)
        run_qber = None

    attacked_run = ProtocolRun(
        protocol=cfg.protocol,
        alice_bits=clean.alice_bits,
        alice_symbols=clean.alice_symbols,
        record=record,
        sifted_alice=run_alice,
        sifted_bob=bob_bits,
        sifted_slots=np.array(bob_idx, dtype=np.int64),
        qber=run_qber,
    )
    outcome = AttackOutcome(
        attack="blinding",
        eve_key=eve_bits,
        bob_key=bob_bits,
        capture_fraction=frac,
        induced_qber=(run_qber - clean.qber) if run_qber is not None and clean.qber is not None else None,
        induced_visibility_drop=None,
        alarms={"watchdog": False, "photocurrent_monitor": monitor_alarm},
        feasibility=feasibility,
        eve_readings=list(readings),
        bob_readings=list(bob_readings),
    )
    return attacked_run, outcome


# ---------------------------------------------------------------------------
# Record assembly and serialization
# ---------------------------------------------------------------------------


def _trace_to_dict(trace: DetectorTrace) -> dict[str, Any]:
    return {
        "clicks": [int(v) for v in trace.clicks],
        "intensity": [float(v) for v in trace.intensity],
        "photocurrent": [float(v) for v in trace.photocurrent],
        "linear_mode": [int(v) for v in trace.linear_mode],
    }


def _trace_from_dict(d: dict[str, Any]) -> DetectorTrace:
    return DetectorTrace(
        clicks=np.array(d["clicks"], dtype=bool),
        intensity=np.array(d["intensity"], dtype=np.float64),
        photocurrent=np.array(d["photocurrent"], dtype=np.float64),
        linear_mode=np.array(d["linear_mode"], dtype=bool),
    )


def _record_to_dict(record: DetectionRecord) -> dict[str, Any]:
    return {
        "slot_period": record.slot_period,
        "detectors": {name: _trace_to_dict(record[name]) for name in record.names},
    }


def _record_from_dict(d: dict[str, Any]) -> DetectionRecord:
    return DetectionRecord(
        detectors={name: _trace_from_dict(t) for name, t in d["detectors"].items()},
        slot_period=d["slot_period"],
    )


def _visibility_to_dict(report: VisibilityReport | None) -> dict[str, Any] | None:
    if report is None:
        return None
    return {
        "per_class": {s: {"d_m1": c.d_m1, "d_m2": c.d_m2} for s, c in report.per_class.items()},
        "overall": {"d_m1": report.overall.d_m1, "d_m2": report.overall.d_m2},
    }


def _visibility_from_dict(d: dict[str, Any] | None) -> VisibilityReport | None:
    if d is None:
        return None
    from .protocols import ClassCounts

    report = VisibilityReport(
        per_class={s: ClassCounts(c["d_m1"], c["d_m2"]) for s, c in d["per_class"].items()},
        overall=ClassCounts(d["overall"]["d_m1"], d["overall"]["d_m2"]),
    )
    return report


def _run_to_dict(run: ProtocolRun) -> dict[str, Any]:
    return {
        "protocol": run.protocol,
        "alice_bits": None if run.alice_bits is None else [int(b) for b in run.alice_bits],
        "alice_symbols": run.alice_symbols,
        "record": _record_to_dict(run.record),
        "sifted_alice": [int(b) for b in run.sifted_alice],
        "sifted_bob": [int(b) for b in run.sifted_bob],
        "sifted_slots": [int(v) for v in run.sifted_slots],
        "qber": run.qber,
        "visibility": _visibility_to_dict(run.visibility_report),
    }


def _run_from_dict(d: dict[str, Any]) -> ProtocolRun:
    return ProtocolRun(
        protocol=d["protocol"],
        alice_bits=None if d["alice_bits"] is None else np.array(d["alice_bits"], dtype=np.int64),
        alice_symbols=d["alice_symbols"],
        record=_record_from_dict(d["record"]),
        sifted_alice=np.array(d["sifted_alice"], dtype=np.int64),
        sifted_bob=np.array(d["sifted_bob"], dtype=np.int64),
        sifted_slots=np.array(d["sifted_slots"], dtype=np.int64),
        qber=d["qber"],
        visibility_report=_visibility_from_dict(d["visibility"]),
    )


def _outcome_to_dict(outcome: AttackOutcome | None) -> dict[str, Any] | None:
    if outcome is None:
        return None
    return {
        "attack": outcome.attack,
        "eve_key": [int(b) for b in outcome.eve_key],
        "bob_key": [int(b) for b in outcome.bob_key],
        "capture_fraction": outcome.capture_fraction,
        "induced_qber": outcome.induced_qber,
        "induced_visibility_drop": outcome.induced_visibility_drop,
        "alarms": dict(outcome.alarms),
        "feasibility": None if outcome.feasibility is None else dict(outcome.feasibility),
        "eve_readings": outcome.eve_readings,
        "bob_readings": outcome.bob_readings,
    }


def _outcome_from_dict(d: dict[str, Any] | None) -> AttackOutcome | None:
    if d is None:
        return None
    return AttackOutcome(
        attack=d["attack"],
        eve_key=np.array(d["eve_key"], dtype=np.int64),
        bob_key=np.array(d["bob_key"], dtype=np.int64),
        capture_fraction=d["capture_fraction"],
        induced_qber=d["induced_qber"],
        induced_visibility_drop=d["induced_visibility_drop"],
        alarms=dict(d["alarms"]),
        feasibility=None if d["feasibility"] is None else dict(d["feasibility"]),
        eve_readings=d["eve_readings"],
        bob_readings=d["bob_readings"],
    )


@dataclass(eq=False)
class RunRecord:
    """Everything one run produced: the config snapshot, Bob's records and
    sifting outcome, the attack outcome when present, and the wall time.

    The content hash covers the canonical serialization minus the wall time,
    which is the only non-reproducible field.
    """

    config: dict[str, Any]
    protocol_run: ProtocolRun
    attack: AttackOutcome | None
    wall_time_s: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": "dprsim-record/1",
            "config": self.config,
            "protocol_run": _run_to_dict(self.protocol_run),
            "attack": _outcome_to_dict(self.attack),
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunRecord":
        if d.get("format") != "dprsim-record/1":
            raise ValueError(f"unsupported record format {d.get('format')!r}")
        return cls(
            config=d["config"],
            protocol_run=_run_from_dict(d["protocol_run"]),
            attack=_outcome_from_dict(d["attack"]),
            wall_time_s=d["wall_time_s"],
        )

    def canonical_json(self, include_volatile: bool = False) -> str:
        payload = self.to_dict()
        if not include_volatile:
            payload.pop("wall_time_s")
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @property
    def any_alarm(self) -> bool:
        return self.attack is not None and self.attack.any_alarm


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def load_config(text: str) -> ScenarioConfig:
    """Parse a scenario document.

    ``golden_name`` pulls in the pinned scenario of that name; any other keys
    in the document overlay it section by section.  Unknown keys and domain
    violations are rejected with the offending field path; parse errors carry
    the line number.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"scenario parse error{where}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("scenario document must be a mapping")
    name = data.get("golden_name")
    if name is not None:
        try:
            base = golden_config_dict(name)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        overlay = {k: v for k, v in data.items() if k != "golden_name"}
        data = _merge(base, overlay)
    return scenario_from_dict(data)


def _merge(base: dict[str, Any], overlay: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def run_scenario(cfg: ScenarioConfig, seed: int | None = None) -> RunRecord:
    """Execute one scenario deterministically; ``seed`` overrides the config seed."""
    cfg.validate()
    if seed is not None:
        cfg = scenario_from_dict({**cfg.to_dict(), "seed": int(seed)})
    started = time.perf_counter()
    rngs = RngFactory(cfg.seed)
    alice_bits, alice_symbols = _alice_material(cfg, rngs)
    pipe = _execute_protocol(cfg, alice_bits, alice_symbols, rngs)

    kind = cfg.attack.kind
    if kind == "none":
        run, outcome = pipe.run, None
    elif kind == "backflash":
        outcome = _run_backflash(cfg, rngs, pipe)
        run = pipe.run
    elif kind == "trojan":
        outcome = _run_trojan(cfg, rngs, pipe)
        run = pipe.run
    elif kind == "blinding":
        run, outcome = _run_blinding(cfg, rngs, pipe)
    else:  # pragma: no cover - config validation rejects this
        raise ConfigError(f"attack.kind: unknown kind {kind!r}")

    wall = time.perf_counter() - started
    return RunRecord(config=cfg.to_dict(), protocol_run=run, attack=outcome, wall_time_s=wall)


def run_golden(name: str, seed: int | None = None) -> RunRecord:
    cfg = scenario_from_dict(golden_config_dict(name))
    return run_scenario(cfg, seed=seed)


def sweep(cfg: ScenarioConfig, parameter_path: str, values: Sequence[Any]) -> list[RunRecord]:
    """Independent seeded runs, one per value of a numeric config parameter.

    The parameter is addressed by its dotted path (e.g.
    ``attack.backflash.photons_per_electron``); each point runs with a seed
    derived deterministically from the base seed and the point index, so the
    results do not depend on execution order.
    """
    cfg.validate()
    base = cfg.to_dict()
    keys = parameter_path.split(".")
    node = base
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"{parameter_path}: no such parameter")
        node = node[k]
    leaf = keys[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"{parameter_path}: no such parameter")
    current = node[leaf]
    if not isinstance(current, (int, float)) or isinstance(current, bool):
        raise ConfigError(f"{parameter_path}: not a numeric parameter (current value {current!r})")
    records: list[RunRecord] = []
    for index, value in enumerate(values):
        point = json.loads(json.dumps(base))
        target = point
        for k in keys[:-1]:
            target = target[k]
        target[leaf] = value
        point["seed"] = derive_sweep_seed(cfg.seed, index)
        records.append(run_scenario(scenario_from_dict(point)))
    return records
