import numpy as np
import pytest

from modwedge.mesh import GridSpec, build_complex


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def torus(res=4, lengths=(1.0, 1.0)):
    n = len(lengths)
    return build_complex(GridSpec(list(lengths), [res] * n, ["periodic"] * n))


def box(res=4, lengths=(1.0, 1.0), marking=None):
    n = len(lengths)
    spec = GridSpec(list(lengths), [res] * n)
    if marking is not None:
        spec.marking = marking
    return build_complex(spec)


# one line per acceptance criterion, filled by test_acceptance and printed at the end
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
