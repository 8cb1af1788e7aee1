from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from hnmaxwell import harness
from hnmaxwell.harness import EXPERIMENTS, FastConfig, ResultRecord, RunConfig, dump_config, load_config, main, observed_orders

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_load_and_round_trip(path):
    cfg = load_config(path)
    assert RunConfig.from_dict(yaml.safe_load(dump_config(cfg))) == cfg


@settings(max_examples=30, deadline=None)
@given(
    experiment=st.sampled_from(EXPERIMENTS),
    alpha=st.floats(0.05, 1.0),
    dts=st.lists(st.floats(1e-6, 1.0), max_size=4),
    Ns=st.lists(st.integers(1, 60), max_size=4),
    enabled=st.booleans(),
    eps_f=st.floats(1e-14, 1e-4),
)
def test_config_round_trip_property(experiment, alpha, dts, Ns, enabled, eps_f):
    cfg = RunConfig(experiment, alpha=alpha, dts=dts, Ns=Ns, fast=FastConfig(enabled=enabled, eps_f=eps_f))
    assert RunConfig.from_dict(yaml.safe_load(dump_config(cfg))) == cfg
    assert cfg.mode == ("fast" if enabled else "direct")


def test_config_rejects_unknown_keys_and_experiments():
    with pytest.raises(ValueError):
        RunConfig.from_dict({"experiment": "energy", "colour": 1})
    with pytest.raises(ValueError):
        RunConfig.from_dict({"experiment": "energy", "fast": {"nodes": 3}})
    with pytest.raises(ValueError):
        RunConfig("bogus")


def test_observed_orders():
    assert observed_orders([1.0], [0.1]) == [None]
    orders = observed_orders([1.0, 0.5, 0.25], [0.4, 0.2, 0.1])
    assert orders[0] is None and orders[1] == pytest.approx(1.0) and orders[2] == pytest.approx(1.0)
    # quartering the step with a quartered error is still first order
    assert observed_orders([1.0, 0.25], [1.0, 0.25])[1] == pytest.approx(1.0)
    assert observed_orders([1.0, 0.25], [0.2, 0.1])[1] == pytest.approx(2.0)


def test_cli_kernel_eval_writes_csv_and_manifest(tmp_path):
    code = main(["kernel-eval", "--config", str(CONFIGS / "kernel_eval.yaml"), "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "kernel-eval.csv").read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 8
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["experiment"] == "kernel-eval"
    assert "numpy" in manifest["versions"] and manifest["meta"]["wall_seconds"] >= 0


def test_direct_mode_output_is_deterministic(tmp_path):
    cfg = CONFIGS / "weights_dump.yaml"
    main(["weights-dump", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["weights-dump", "--config", str(cfg), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "weights-dump.csv").read_bytes() == (tmp_path / "b" / "weights-dump.csv").read_bytes()


def test_weights_dump_sums_to_closed_form(tmp_path):
    from hnmaxwell.prabhakar import KernelSpec, weight_sum

    cfg = load_config(CONFIGS / "weights_dump.yaml")
    rec = harness.run_experiment(cfg)
    total = sum(r["w_j"] for r in rec.rows)
    assert total == pytest.approx(weight_sum(KernelSpec(cfg.alpha, cfg.beta, cfg.sigma), cfg.dt, cfg.K), rel=1e-12)


def test_fastconv_verify_reports_failures(tmp_path):
    cfg = load_config(CONFIGS / "fastconv_verify.yaml")
    cfg.fast.ncol = 2
    cfg.levels = 2
    rec = harness.run_experiment(cfg)
    assert not rec.ok and all(r["passed"] == 0 for r in rec.rows)


def test_subcommand_must_match_config(tmp_path):
    with pytest.raises(SystemExit):
        main(["energy", "--config", str(CONFIGS / "kernel_eval.yaml"), "--out", str(tmp_path)])


def test_failed_check_gives_nonzero_exit(tmp_path, monkeypatch):
    def failing(cfg):
        return ResultRecord("energy", cfg.to_dict(), rows=[{"k": 0}], checks={"monotone": False})

    monkeypatch.setitem(harness._DRIVERS, "energy", failing)
    assert main(["energy", "--config", str(CONFIGS / "energy.yaml"), "--out", str(tmp_path)]) == 1


def test_small_energy_run_through_driver():
    cfg = RunConfig("energy", N=6, dt=0.5, Nt=20, panels=[[0.4, 0.6]], fast=FastConfig(enabled=False))
    rec = harness.run_experiment(cfg)
    assert rec.ok and len(rec.rows) == 21
    energies = [r["energy"] for r in rec.rows]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energies, energies[1:]))


def test_small_time_convergence_run():
    cfg = RunConfig("time-convergence", N=8, T=0.5, dts=[0.125, 0.0625], compare_modes=True)
    rec = harness.run_experiment(cfg)
    assert [r["Nt"] for r in rec.rows] == [4, 8]
    assert rec.rows[0]["OrderE"] == "" and math.isfinite(rec.rows[1]["OrderE"])
    assert rec.rows[1]["ErrE_DF"] <= 1e-10


def test_step_must_divide_final_time():
    cfg = RunConfig("time-convergence", N=4, T=1.0, dts=[0.3])
    with pytest.raises(ValueError):
        harness.run_experiment(cfg)
