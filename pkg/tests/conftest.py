import numpy as np
import pytest

from cocoa_decoding import _backend, dist, signals, strategies


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    k = _backend.load(request.param)
    for mod in (dist, signals, strategies):
        monkeypatch.setattr(mod, "kernels", k)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dist(rng, vocab):
    """Random distribution with a spread of sharpness levels."""
    scale = rng.choice([0.1, 1.0, 4.0, 12.0])
    return dist.from_logits(rng.normal(0.0, scale, vocab))


ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[2:])):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
