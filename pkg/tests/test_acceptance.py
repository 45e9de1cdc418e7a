"""Every acceptance criterion at its stated tolerance, one PASS/FAIL line each.

Lines are printed as the tests run and repeated in the terminal summary.
"""
import pytest

from cmcfol.cli_io.acceptance import CRITERIA, AcceptanceContext, CriterionResult, run_criterion
from cmcfol.cli_io.cli import main


@pytest.fixture(scope="module")
def ctx():
    return AcceptanceContext()


def _record(result: CriterionResult, lines):
    line = result.line()
    lines.append(line)
    print(line)
    assert result.passed, line


@pytest.mark.parametrize("fn", CRITERIA, ids=[f"criterion_{i + 1}" for i in range(len(CRITERIA))])
def test_criterion(fn, ctx, acceptance_lines):
    _record(run_criterion(fn, ctx), acceptance_lines)


def test_criterion_11_verify_twice(tmp_path, acceptance_lines):
    reports = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["verify", "--out", str(out)]) == 0
        reports.append((out / "acceptance.csv").read_bytes())
    same = reports[0] == reports[1]
    _record(CriterionResult(11, "determinism", float(same), 1.0, "==", same, "verify run twice, acceptance.csv bytes"),
            acceptance_lines)
