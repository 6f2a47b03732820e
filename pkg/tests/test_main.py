import json
import os

import pytest

from main import main
from symexpr import Chart, parse

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture(autouse=True)
def isolated_home(monkeypatch, tmp_path):
    monkeypatch.setenv("DENSOPS_HOME", str(tmp_path / "home"))


def test_schwarzian(capsys):
    assert main(["schwarzian", "y^3"]) == 0
    out = capsys.readouterr().out.strip()
    line = Chart("line", ["y"])
    assert parse(out, line) == parse("-4/y^2", line)


def test_schwarzian_of_constant_fails(capsys):
    assert main(["schwarzian", "2"]) == 1


def test_bv_bracket(capsys):
    assert main(["bv", "bracket", "x1", "th1"]) == 0
    assert capsys.readouterr().out.strip() == "1"


def test_pencil(capsys):
    assert main(["pencil", "--S", "1", "--gamma", "0", "--lam", "1/2"]) == 0
    assert capsys.readouterr().out.strip()


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.check")]) == 2
    assert "absent.check" in capsys.readouterr().err


def test_run_reports_json_lines(tmp_path, capsys):
    path = tmp_path / "small.check"
    path.write_text(
        'chart L even=x\ncheck ok expr expr="x - x" chart=L\ncheck bad expr expr="x" chart=L\n',
        encoding="utf-8",
    )
    assert main(["run", str(path), "--seed", "2", "--format", "json-lines"]) == 1
    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert [r.get("status") for r in records[:2]] == ["pass", "fail"]
    assert records[-1]["seed"] == 2


def test_run_uses_saved_settings(tmp_path, capsys):
    from config_manager import ConfigManager

    ConfigManager().save({"format": "json-lines"})
    path = tmp_path / "small.check"
    path.write_text('chart L even=x\ncheck ok expr expr="x - x" chart=L\n', encoding="utf-8")
    assert main(["run", str(path)]) == 0
    last = capsys.readouterr().out.splitlines()[-1]
    assert json.loads(last)["exit_code"] == 0


def test_version(capsys):
    from version import VERSION, get_version, get_version_info

    assert get_version() == ".".join(str(part) for part in get_version_info()) == VERSION
    with pytest.raises(SystemExit):
        main(["--version"])
    assert VERSION in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["schwarzian", "x+*2"],
        ["sturm", "1/("],
        ["pencil", "--S", "1", "--gamma", "x+"],
        ["pencil", "--S", "1", "--gamma", "z"],
        ["pencil", "--even", "x,x", "--S", "1, 0; 0, 1", "--gamma", "0"],
        ["groupoid", "--S", "1", "--X", "x+*2"],
        ["bv", "bracket", "x1", "th9"],
        ["bv", "laplacian", "th1^2"],
    ],
)
def test_malformed_input_exits_with_usage_code(argv, capsys):
    assert main(argv) == 2
    assert argv[0] in capsys.readouterr().err


@pytest.mark.slow
def test_run_bundled_suite_from_repository_root(monkeypatch, capsys):
    monkeypatch.chdir(ROOT)
    assert main(["run", "paper-suite.check", "--seed", "1"]) == 0
    assert capsys.readouterr().out
