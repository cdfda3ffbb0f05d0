import pytest

from hybridfl.synth import SynthConfig, generate

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_repo():
    return generate(SynthConfig(seed=7, n_projects=3, versions_per_project=8,
                                statements_per_version=60, fault_rate=0.05))
