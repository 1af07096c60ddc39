import json
import logging

from dmimo_link.experiments.results import RunResult, SweepPoint
from dmimo_link.logging_plugin import SweepLoggingPlugin

PLUGIN_LOGGER = "dmimo_link.plugin"


async def test_sweep_lifecycle_text_records(caplog):
    plugin = SweepLoggingPlugin()
    caplog.set_level(logging.INFO, logger=PLUGIN_LOGGER)
    await plugin.before_sweep_callback("ber-sweep", "h", 2, 2024)
    await plugin.before_point_callback("ber-sweep", 0, "h", 1e-7)
    elapsed = await plugin.after_point_callback("ber-sweep", 0, {"ber_zf": 0.0125}, trials=100, failures=1)
    result = RunResult("ber-sweep", "h", [SweepPoint(1e-7, {"ber_zf": 0.0125}, 100, 1)])
    total = await plugin.after_sweep_callback("ber-sweep", result)

    assert elapsed is not None and elapsed >= 0
    assert total is not None and total >= elapsed
    messages = [r.getMessage() for r in caplog.records if r.name == PLUGIN_LOGGER and r.levelno >= logging.INFO]
    assert messages[0] == "Sweep started: sweep=ber-sweep, axis=h, points=2, seed=2024"
    assert "Point completed: sweep=ber-sweep, index=0, trials=100, failures=1" in messages[2]
    assert "ber_zf=0.0125" in messages[2]
    assert messages[3].startswith("Sweep completed: sweep=ber-sweep, rows=1")


async def test_json_records(caplog):
    plugin = SweepLoggingPlugin(use_json_logging=True)
    caplog.set_level(logging.INFO, logger=PLUGIN_LOGGER)
    await plugin.before_point_callback("mse-sweep", 3, "k_tot", 64)
    await plugin.after_point_callback("mse-sweep", 3, {"mse_ml_db": -3.5}, trials=10)
    records = [json.loads(r.getMessage()) for r in caplog.records if r.name == PLUGIN_LOGGER and r.levelno >= logging.INFO]
    assert records[0]["event"] == "point_started"
    assert records[0]["value"] == 64
    assert records[1]["event"] == "point_completed"
    assert records[1]["metrics"] == {"mse_ml_db": -3.5}
    assert records[1]["execution_time_seconds"] >= 0


async def test_trial_error_is_a_warning(caplog):
    plugin = SweepLoggingPlugin()
    caplog.set_level(logging.INFO, logger=PLUGIN_LOGGER)
    await plugin.on_trial_error_callback("block-protocol", 1, 17, error_type="EstimabilityError", error="singular")
    record = caplog.records[-1]
    assert record.levelno == logging.WARNING
    assert "trial=17" in record.getMessage()
    assert "EstimabilityError" in record.getMessage()


async def test_sweep_error_logged(caplog):
    plugin = SweepLoggingPlugin()
    caplog.set_level(logging.INFO, logger=PLUGIN_LOGGER)
    await plugin.on_error_callback("ber-sweep", ValueError("bad point"))
    record = caplog.records[-1]
    assert record.levelno == logging.ERROR
    assert "error_type=ValueError" in record.getMessage()


async def test_after_point_without_start_has_no_timing():
    plugin = SweepLoggingPlugin()
    assert await plugin.after_point_callback("ber-sweep", 9, None) is None


def test_metric_summary_is_short():
    plugin = SweepLoggingPlugin()
    summary = plugin._summarize_metrics({f"m{i}": float(i) for i in range(8)})
    assert summary.count("=") == 5
    assert plugin._summarize_metrics({}) is None
