import numpy as np
import pytest

from tumoreval.synthetic import write_study


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def study(tmp_path_factory):
    """Ten GTR cases plus two STR and one censored case, on disk."""
    return write_study(tmp_path_factory.mktemp("study"), n_cases=10, seed=3, dims=(24, 24, 16),
                       n_str=2, n_alive=1)


def random_labels(rng, dims, p_fg=0.3):
    lab = rng.choice(np.array([0, 1, 2, 4], dtype=np.uint8), size=dims,
                     p=[1 - p_fg, p_fg / 3, p_fg / 3, p_fg / 3])
    return lab


# --- acceptance reporting ------------------------------------------------------------
_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
