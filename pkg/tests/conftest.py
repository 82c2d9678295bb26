import warnings

ACCEPTANCE_LINES = []


def pytest_configure(config):
    warnings.filterwarnings("ignore", message="spectral radius", category=RuntimeWarning)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
