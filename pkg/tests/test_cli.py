import json

import numpy as np
import pytest
import yaml

from dprsim.cli import main
from dprsim.config import scenario_from_dict
from dprsim.report import (
    MetricsSummary,
    emit_outputs,
    load_metrics,
    load_record,
    read_events,
    read_key,
    summarize,
)
from dprsim.scenario import run_golden, run_scenario


# ---------------------------------------------------------------------------
# Output files round-trip
# ---------------------------------------------------------------------------


def test_emit_outputs_round_trip(tmp_path):
    record = run_golden("cow-fig2")
    emit_outputs(record, tmp_path)

    events = read_events(tmp_path / "events.tsv")
    bob = record.protocol_run.record
    assert set(events) == set(bob.names)
    for name in bob.names:
        np.testing.assert_array_equal(events[name]["click"], bob[name].clicks)
        np.testing.assert_array_equal(events[name]["intensity"], bob[name].intensity)

    assert read_key(tmp_path / "alice.key").tolist() == record.protocol_run.sifted_alice.tolist()
    assert read_key(tmp_path / "bob.key").tolist() == record.protocol_run.sifted_bob.tolist()

    stored = load_metrics(tmp_path / "metrics.json")
    assert stored.to_dict() == summarize(record).to_dict()

    clone = load_record(tmp_path / "record.json")
    assert clone.content_hash() == record.content_hash()
    assert summarize(clone).to_dict() == stored.to_dict()


def test_trace_files_cover_every_detector(tmp_path):
    record = run_golden("cow-fig2")
    emit_outputs(record, tmp_path)
    for name in record.protocol_run.record.names:
        lines = (tmp_path / f"trace_{name}.tsv").read_text().splitlines()
        assert lines[0].startswith("# dprsim-trace/1")
        slots = [float(line.split("\t")[1]) for line in lines[2:]]
        np.testing.assert_allclose(slots, record.protocol_run.record[name].intensity)


def test_emit_outputs_empty_run_writes_valid_files(tmp_path):
    # Quarter-turn phase steps put half the light on each interferometer port,
    # below a 0.99 click threshold: a run with zero clicks everywhere.
    cfg = scenario_from_dict(
        {
            "protocol": "dps",
            "n_symbols": 8,
            "seed": 2,
            "detector": {"click_threshold_rel": 0.99},
            "channel": {"phase_tamper_half_turns": [0.0, 0.5] * 4},
        }
    )
    record = run_scenario(cfg)
    assert record.protocol_run.sifted_length == 0
    emit_outputs(record, tmp_path)
    assert read_key(tmp_path / "alice.key").size == 0
    assert read_key(tmp_path / "bob.key").size == 0
    assert load_metrics(tmp_path / "metrics.json").sifted_length == 0
    assert read_events(tmp_path / "events.tsv")["D1"]["click"].sum() == 0


def test_metrics_recomputation_is_idempotent():
    record = run_golden("cow-blinding")
    first = summarize(record).to_dict()
    second = summarize(record).to_dict()
    assert first == second


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------


def test_cli_run_golden_by_config_name(tmp_path, capsys):
    code = main(["run", "--config", "cow-fig2", "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "visibility_overall=1.000000" in out
    assert (tmp_path / "out" / "metrics.json").exists()
    assert read_key(tmp_path / "out" / "alice.key").tolist() == read_key(tmp_path / "out" / "bob.key").tolist()


def test_cli_run_config_file(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump({"protocol": "dps", "n_symbols": 8, "seed": 1}))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0


def test_cli_attack_requires_attack_section(tmp_path, capsys):
    code = main(["attack", "--config", "dps-ideal", "--out", str(tmp_path / "out")])
    assert code == 1
    assert "attack" in capsys.readouterr().err


def test_cli_attack_runs_and_reports_capture(tmp_path, capsys):
    code = main(["attack", "--config", "dps-blinding", "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "capture_fraction=1.000000" in out
    assert "bob_record_equals_eve_readings=True" in out
    assert (tmp_path / "out" / "eve.key").exists()
    metrics = load_metrics(tmp_path / "out" / "metrics.json")
    assert metrics.bob_record_equals_eve_readings is True


def test_cow_reference_run_destructive_monitor_trace_negligible(tmp_path):
    record = run_golden("cow-fig2")
    emit_outputs(record, tmp_path)
    lines = (tmp_path / "trace_D_M2.tsv").read_text().splitlines()[2:]
    values = [float(line.split("\t")[1]) for line in lines]
    # Nothing above the quarter-intensity apparatus edges, and no detections.
    assert max(values) <= 0.25 * 0.1 + 1e-12
    assert record.protocol_run.record["D_M2"].click_count == 0


def test_cli_watchdog_alarm_exit_code(tmp_path):
    code = main(["run", "--golden", "dps-trojan-watchdog", "--out", str(tmp_path / "out")])
    assert code == 3


def test_cli_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err


def test_cli_missing_scenario(capsys):
    assert main(["run", "--config", "no-such-thing"]) == 1
    assert "no such file or golden" in capsys.readouterr().err


def test_cli_invalid_config_file(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("protocol: cow\nt_b: 1.3\n")
    assert main(["run", "--config", str(path)]) == 1
    assert "t_b" in capsys.readouterr().err


def test_cli_report_recomputes_stored_metrics(tmp_path, capsys):
    assert main(["run", "--config", "cow-fig2", "--out", str(tmp_path / "out")]) == 0
    capsys.readouterr()
    assert main(["report", "--record", str(tmp_path / "out" / "record.json")]) == 0
    reported = json.loads(capsys.readouterr().out)
    stored = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert reported == stored


def test_cli_goldens_listing(capsys):
    assert main(["goldens"]) == 0
    out = capsys.readouterr().out
    assert "cow-fig2" in out and "dps-blinding" in out


def test_cli_goldens_dump_is_loadable(capsys):
    assert main(["goldens", "--dump", "cow-fig4-tamper"]) == 0
    dumped = yaml.safe_load(capsys.readouterr().out)
    cfg = scenario_from_dict(dumped)
    assert cfg.channel.phase_tamper_half_turns is not None


def test_cli_goldens_run_single(tmp_path):
    assert main(["goldens", "--run", "cow-fig2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "cow-fig2" / "metrics.json").exists()


def test_cli_default_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DPRSIM_OUT_ROOT", str(tmp_path))
    assert main(["run", "--config", "cow-fig2"]) == 0
    assert (tmp_path / "dprsim-cow-fig2" / "metrics.json").exists()


def test_cli_seed_override_lands_in_record(tmp_path):
    assert main(["run", "--config", "dps-ideal", "--seed", "4242", "--out", str(tmp_path / "a")]) == 0
    record = load_record(tmp_path / "a" / "record.json")
    assert record.config["seed"] == 4242


def test_cli_sweep(tmp_path):
    code = main(
        [
            "sweep",
            "--config", "cow-blinding",
            "--param", "t_b",
            "--values", "0.5,0.7",
            "--out", str(tmp_path / "sw"),
        ]
    )
    assert code == 0
    data = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert data["param"] == "t_b"
    assert len(data["points"]) == 2
    assert (tmp_path / "sw" / "point_000" / "metrics.json").exists()


def test_cli_sweep_bad_values(capsys):
    assert main(["sweep", "--config", "dps-ideal", "--param", "t_b", "--values", "a,b"]) == 1
    assert "comma-separated" in capsys.readouterr().err


def test_metrics_format_guard(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"format": "other/9"}))
    with pytest.raises(ValueError):
        load_metrics(bad)
    with pytest.raises(ValueError):
        MetricsSummary.from_dict({"format": "nope"})
