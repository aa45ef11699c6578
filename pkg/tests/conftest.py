import os
import re

import numpy as np
import pytest

from chdbench.dataset import Dataset, ingest_csv
from chdbench.synthetic import framingham_like

DATA_ENV = "CHD_DATA"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


@pytest.fixture(scope="session")
def synth() -> Dataset:
    return framingham_like(seed=7)


@pytest.fixture(scope="session")
def framingham() -> Dataset:
    path = os.environ.get(DATA_ENV)
    if not path or not os.path.isfile(path):
        pytest.skip(f"Framingham CSV not available (set {DATA_ENV} to the Kaggle framingham.csv)")
    return ingest_csv(path)


def gaussian_groups(n1, n2, p, shift=1.0, seed=0, scale2=1.0):
    rng = np.random.default_rng(seed)
    g1 = rng.normal(size=(n1, p)) + shift
    g2 = rng.normal(size=(n2, p)) * scale2
    return g1, g2


def small_dataset(n1=60, n2=140, p=4, informative=(0,), seed=0) -> Dataset:
    """Gaussian data where only the ``informative`` columns shift with the label."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n1 + n2, p))
    y = np.r_[np.ones(n1, dtype=int), np.zeros(n2, dtype=int)]
    for j in informative:
        X[:n1, j] += 1.2
    sex = tuple("male" if i % 2 else "female" for i in range(n1 + n2))
    return Dataset(X, y, sex, tuple(f"v{j + 1}" for j in range(p)), tuple(range(1, p + 1)))


_outcomes: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "setup" and report.skipped:
        _outcomes[name] = ("SKIP", str(report.longrepr[-1]) if isinstance(report.longrepr, tuple) else "")
    elif report.when == "call":
        if report.passed:
            _outcomes[name] = ("PASS", "")
        elif report.skipped:
            _outcomes[name] = ("SKIP", str(report.longrepr[-1]) if isinstance(report.longrepr, tuple) else "")
        else:
            _outcomes[name] = ("FAIL", "")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    def order(name):
        m = re.search(r"_(\d+)_", name)
        return int(m.group(1)) if m else 99

    for name in sorted(_outcomes, key=order):
        status, why = _outcomes[name]
        line = f"{status:4s}  {name}"
        if why:
            line += f"  ({why.replace('Skipped: ', '')})"
        terminalreporter.write_line(line)
