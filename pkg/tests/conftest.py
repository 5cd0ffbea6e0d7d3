import pytest

from electrolyte_casimir import fitting

GRID_COUNT = 31
U_VALUES = (0.0, 0.04, 0.1, 0.25)

_CRITERIA = {}


@pytest.fixture(scope="session")
def validation_grid():
    return fitting.log_grid(1e-3, 1e2, GRID_COUNT)


@pytest.fixture(scope="session")
def phi_samples(validation_grid):
    """Exact phi on the validation grid for every u, with error estimates."""
    return {u: fitting.sample_phi(u, validation_grid) for u in U_VALUES}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion and assert it."""

    def record(number, name, passed, measured):
        _CRITERIA[(number, name)] = (bool(passed), measured)
        print(f"criterion {number} ({name}): {'PASS' if passed else 'FAIL'} {measured}")
        assert passed, f"criterion {number} ({name}) failed: {measured}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, name), (passed, measured) in sorted(_CRITERIA.items()):
        terminalreporter.write_line(
            f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {measured}")
