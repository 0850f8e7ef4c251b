import pytest

from chaos_edgeworth.simulate import FbmHermiteModel, sample_fbm_hermite

# One-line verdicts recorded by the acceptance suite; echoed in a terminal
# section at the end of the run so the pass/fail state of every top-level
# requirement is visible even when per-test output is captured.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Mutable list of verdict lines shown in the terminal summary."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# Session-scoped sample pools shared by the diagnostics property tests and
# the acceptance suite, so each (model, n, N) pair is simulated once.


@pytest.fixture(scope="session")
def fbm_family_1m():
    """p=2, H=0.5 batches at N=1e6, keyed by n (the rate-check family)."""
    return {n: sample_fbm_hermite(FbmHermiteModel(0.5, 2, n), 1_000_000,
                                  seed=777)
            for n in (32, 64, 128, 256)}


@pytest.fixture(scope="session")
def fbm_1024_1m():
    """The n=1024 member used by the superconvergence and band checks."""
    return sample_fbm_hermite(FbmHermiteModel(0.5, 2, 1024), 1_000_000,
                              seed=777)


@pytest.fixture(scope="session")
def fbm_family_2m():
    """p=2, H=0.5 batches at N=2e6 for the order-2 rate check."""
    return {n: sample_fbm_hermite(FbmHermiteModel(0.5, 2, n), 2_000_000,
                                  seed=778)
            for n in (16, 32, 64, 128)}
