import numpy as np
import pytest

import explicit_cbf.oracle as oracle_mod
from explicit_cbf.qp_core import kkt_residuals

KKT_TOL = 1e-7

# Session-wide tally of certified solves, read by the acceptance report.
KKT_LOG = {"checked": 0, "failed": []}


@pytest.fixture(autouse=True)
def certify_optimal_solves(monkeypatch):
    """Every Optimal oracle result produced during a test must pass the KKT check."""
    original = oracle_mod._optimal
    failures = []

    def checked(constraints, nominal, weight, cand, iterations):
        rep = kkt_residuals(cand, constraints, nominal, weight)
        KKT_LOG["checked"] += 1
        if not rep.passes(KKT_TOL):
            failures.append(rep)
            KKT_LOG["failed"].append(rep)
        return original(constraints, nominal, weight, cand, iterations)

    monkeypatch.setattr(oracle_mod, "_optimal", checked)
    yield
    if failures:
        pytest.fail(f"{len(failures)} Optimal solves failed KKT certification; "
                    f"worst {max(r.worst() for r in failures):.3e}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance report lines, filled by tests/test_acceptance.py.
ACCEPTANCE: dict = {}


def pytest_collection_modifyitems(session, config, items):
    # acceptance checks run last so the KKT tally covers the whole session
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
