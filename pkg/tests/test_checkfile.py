import os

import pytest

from checkfile import load_checkfile, parse_checkfile
from charts import Diffeomorphism
from densities import TensorDensity
from errors import CheckFileError
from symexpr import Chart

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

HEADER = """\
chart L even=x params=C
chart M even=y
diffeo m source=L target=M forward="y=(2*x+1)/(x+3)" inverse="x=(3*y-1)/(2-y)"
"""


def test_declarations_are_built():
    parsed = parse_checkfile(HEADER + "check family line-family chart=L param=C expect=zero\n")
    assert [d.name for d in parsed.declarations] == ["L", "M", "m"]
    assert isinstance(parsed.namespace["L"], Chart)
    assert parsed.namespace["L"].params == ("C",)
    assert isinstance(parsed.namespace["m"], Diffeomorphism)
    check = parsed.checks[0]
    assert (check.name, check.op, check.expect, check.line) == ("family", "line-family", "zero", 4)
    assert check.args == {"chart": "L", "param": "C"}


def test_comments_and_blank_lines_are_skipped():
    parsed = parse_checkfile("# header\n\nchart L even=x  # the line\n")
    assert [d.line for d in parsed.declarations] == [3]


def test_anonymous_check_is_named_after_its_line():
    parsed = parse_checkfile("chart L even=x\ncheck expr expr=\"x - x\" chart=L\n")
    assert parsed.checks[0].name == "expr@2"


def test_continuation_keeps_first_line_number():
    text = "chart S11 even=x odd=th\noperator A chart=S11 \\\n    terms=\"x*dx*dth\"\ncheck inv involution op=A\n"
    parsed = parse_checkfile(text)
    assert parsed.declarations[1].line == 2
    assert parsed.checks[0].line == 4


def test_darboux_tensor_declaration():
    parsed = parse_checkfile("chart S22 even=x1,x2 odd=th1,th2\ntensor S chart=S22 rows=darboux\n")
    assert isinstance(parsed.namespace["S"], TensorDensity)


def test_equal_and_error_expectations():
    text = (
        "chart L even=x\n"
        "operator Lam0 chart=L terms=\"dx^2 + x*dx\" lam=0\n"
        "check s schwarzian x=\"y^3\" expect=equal value=\"-4/y^2\"\n"
        "check singular pencil_through op=Lam0 expect=error error=lambda=0\n"
    )
    equal, error = parse_checkfile(text).checks
    assert equal.value == "-4/y^2"
    assert "value" not in equal.args
    assert error.expect == "error"
    assert error.error == "lambda=0"


@pytest.mark.parametrize("text, line", [
    ("chart L even=x\nchart L even=y\n", 2),
    ("frobnicate L even=x\n", 1),
    ("chart L even=x\ncheck a no-such-op chart=L\n", 2),
    ("chart L even=x\ncheck s schwarzian\n", 2),
    ("chart L even=x\ncheck e expr expr=x chart=L expect=equal\n", 2),
    ("chart L even=x\ncheck e expr expr=x chart=L expect=maybe\n", 2),
    ("chart L even=x\ncheck e expr expr=x chart=L chart=L\n", 2),
    ("chart L even=x\nexpr e chart=Z value=x\n", 2),
    ("chart L even=x\nexpr e chart=L value=\"z + 1\"\n", 2),
    ("chart L even=x\nexpr e chart=L value=\"x +\n", 2),
    ("chart L even=x\nexpr e chart=L value=x\ncheck e expr expr=e\n", 3),
])
def test_errors_carry_the_line(text, line):
    with pytest.raises(CheckFileError) as info:
        parse_checkfile(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}")


def test_syntax_error_column_points_into_the_value():
    with pytest.raises(CheckFileError) as info:
        parse_checkfile('chart L even=x\nexpr e chart=L value="x + * 2"\n')
    assert info.value.line == 2
    # the `*` sits at column 27 of the second line
    assert info.value.column == 27


def test_unknown_keyword_column():
    with pytest.raises(CheckFileError) as info:
        parse_checkfile("chart L even=x\n  bogus x=1\n")
    assert info.value.column == 3


def test_missing_file(tmp_path):
    with pytest.raises(CheckFileError):
        load_checkfile(str(tmp_path / "missing.check"))


def test_load_from_disk(tmp_path):
    path = tmp_path / "small.check"
    path.write_text(HEADER, encoding="utf-8")
    parsed = load_checkfile(str(path))
    assert parsed.path == str(path)
    assert len(parsed.declarations) == 3


def test_bundled_suite_parses():
    parsed = load_checkfile(os.path.join(ROOT, "paper-suite.check"))
    names = [c.name for c in parsed.checks]
    assert len(names) == len(set(names))
    assert "singular-lambda" in names
