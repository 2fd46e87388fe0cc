import json

import pytest
from click.testing import CliRunner

from s3sim.cli import main
from s3sim.config import ConfigError, parse_config, patch_dimension
from s3sim.group import D4_SPEC
from s3sim.harness import run_experiment

SMALL = {
    "verify": {"kind": "verify", "seed": 1},
    "protocol": {"kind": "protocol", "seed": 2},
    "syndromes": {"kind": "syndromes", "seed": 3, "shots": 500},
    "decode": {"kind": "decode", "seed": 4, "trials": 3, "rates": {"p_Zq": 0.05}},
    "magic": {"kind": "magic", "seed": 5},
}


def test_defaults():
    cfg = parse_config({"kind": "verify", "seed": 0})
    assert (cfg.rows, cfg.columns, cfg.qutrit_window) == (2, 3, (1, 2))
    assert cfg.backend == "exact" and cfg.trials == 1
    cfg = parse_config('{"kind": "protocol", "seed": 0, "group": "D4"}')
    assert cfg.group_spec is D4_SPEC
    assert parse_config({"kind": "decode", "seed": 0}).rates == {
        "p_X": 0.0, "p_Z": 0.0, "p_Xq": 0.0, "p_Zq": 0.0}
    assert patch_dimension(2, 3, (1, 2)) == 124416


def test_overrides_win():
    cfg = parse_config({"kind": "decode", "seed": 0, "trials": 5},
                       {"seed": 9, "trials": None, "backend": "syndrome"})
    assert (cfg.seed, cfg.trials, cfg.backend) == (9, 5, "syndrome")


@pytest.mark.parametrize("doc,fragment", [
    ({"kind": "verify"}, "seed: missing"),
    ({"kind": "verify", "seed": -1}, "non-negative"),
    ({"kind": "teleport", "seed": 0}, "unknown kind"),
    ({"kind": "verify", "seed": 0, "colour": 1}, "unknown fields"),
    ({"kind": "decode", "seed": 0, "rates": {"p_X": 0.7}}, "outside [0, 1/2]"),
    ({"kind": "decode", "seed": 0, "rates": {"p_Y": 0.1}}, "unknown keys"),
    ({"kind": "verify", "seed": 0, "group": "D4"}, "only supported by the protocol"),
    ({"kind": "verify", "seed": 0, "backend": "fast"}, "backend"),
    ({"kind": "verify", "seed": 0, "budget": 1000}, "dimension budget"),
    ({"kind": "verify", "seed": 0, "qutrit_window": [0, 2]}, "must lie in columns"),
    ({"kind": "protocol", "seed": 0, "qubit_window": [0, 2]}, "protocol:"),
])
def test_rejections(doc, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert any(fragment in e for e in info.value.errors)


def test_errors_are_collected():
    with pytest.raises(ConfigError) as info:
        parse_config({"kind": "decode", "seed": -2, "rates": {"p_X": 0.9}, "extra": 1})
    assert len(info.value.errors) == 3
    with pytest.raises(ConfigError):
        parse_config("{not json")


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_cli_success_and_outputs(tmp_path):
    cfg = _write(tmp_path, SMALL["magic"])
    out = tmp_path / "out"
    res = CliRunner().invoke(main, ["magic", "--config", str(cfg), "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert res.output.splitlines()[0] == "layer,branch,probability,amplitudes"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == 0 and manifest["config"]["seed"] == 5
    assert (out / "summary.csv").read_text().startswith("layer,")


def test_cli_config_errors_exit_2(tmp_path):
    runner = CliRunner()
    bad = _write(tmp_path, {"kind": "verify", "seed": -1, "rows": 0})
    res = runner.invoke(main, ["verify", "--config", str(bad)])
    assert res.exit_code == 2 and res.output.count("config error") == 2
    other = _write(tmp_path, SMALL["magic"], "magic.json")
    assert runner.invoke(main, ["verify", "--config", str(other)]).exit_code == 2
    missing = tmp_path / "nope.json"
    assert runner.invoke(main, ["verify", "--config", str(missing)]).exit_code == 2


def test_cli_invariant_failure_exits_1(tmp_path, monkeypatch):
    from s3sim import harness

    def broken(cfg, sink):
        sink.record(check="always fails")
        sink.check("always fails", False)

    monkeypatch.setitem(harness.RUNNERS, "magic", broken)
    cfg = _write(tmp_path, SMALL["magic"])
    res = CliRunner().invoke(main, ["magic", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 1
    assert "invariant failed: always fails" in res.output


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_rows_carry_seed_and_backend(kind):
    sink = run_experiment(parse_config(SMALL[kind]))
    assert sink.status == 0, sink.failures
    for line in sink.jsonl().splitlines():
        row = json.loads(line)
        assert row["seed"] is not None and row["backend"] in ("exact", "syndrome")


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_same_seed_gives_identical_jsonl(tmp_path, kind):
    cfg = _write(tmp_path, SMALL[kind])
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        res = CliRunner().invoke(main, [kind, "--config", str(cfg), "--out", str(out)])
        assert res.exit_code == 0, res.output
        blobs.append((out / "results.jsonl").read_bytes())
    assert blobs[0] == blobs[1] and blobs[0]
