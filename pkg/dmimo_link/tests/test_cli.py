import pytest

from dmimo_link import cli
from dmimo_link.cli import build_parser, main

SMALL_RUN = """\
K_TOT=32
BLOCK_LENGTH=100
TRIALS=4
TRIAL_CAP=8
SWEEP_AXIS=h
SWEEP_VALUES=2e-7
SAMPLING=mean
K1=10
BEAM_WIDTH=8
"""


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(cli, "configure_logging", lambda *args, **kwargs: None)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.env"
    path.write_text(SMALL_RUN, encoding="utf-8")
    return str(path)


def test_parser_knows_every_command():
    parser = build_parser()
    for command in cli.COMMANDS:
        args = parser.parse_args([command, "--seed", "3"])
        assert args.command == command
        assert args.seed == 3
    with pytest.raises(SystemExit):
        parser.parse_args(["fit-everything"])


def test_interference_sweep_to_stdout(capsys):
    assert main(["interference-sweep"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "h,mode,metric,trials,failures"
    assert len(lines) == 1 + 16 * 2


def test_design_training_writes_text(config_file, tmp_path):
    out = tmp_path / "training.txt"
    assert main(["design-training", "--config", config_file, "--out", str(out)]) == 0
    rows = out.read_text(encoding="utf-8").splitlines()
    assert len(rows) == 2
    assert all(len(row) == 10 and set(row) <= {"0", "1"} for row in rows)


def test_ber_sweep_writes_csv(config_file, tmp_path):
    out = tmp_path / "ber.csv"
    assert main(["ber-sweep", "--config", config_file, "--detector", "zf", "--trials", "2", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "h,ber_zf,ber_zf_lo,ber_zf_hi,trials,failures"
    assert lines[1].endswith(",2,0")


def test_bad_config_exits_with_error(tmp_path):
    path = tmp_path / "bad.env"
    path.write_text("TRIALS=ten\n", encoding="utf-8")
    assert main(["ber-sweep", "--config", str(path)]) == 2


def test_missing_config_exits_with_error(tmp_path):
    assert main(["mse-sweep", "--config", str(tmp_path / "nope.env")]) == 2


@pytest.mark.parametrize("command", ["ber-sweep", "block-protocol", "mse-sweep"])
def test_csv_is_identical_across_worker_counts(config_file, tmp_path, command):
    outputs = []
    for workers in (1, 2, 1):
        out = tmp_path / f"{command}-{len(outputs)}.csv"
        assert main([command, "--config", config_file, "--seed", "5", "--workers", str(workers), "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
