import pytest

from delivery_detect.dataset.corpus import Corpus
from delivery_detect.pipeline import label_corpus, propose_corpus
from delivery_detect.synth import SynthConfig, build_corpus

TINY = SynthConfig(n_cameras=3, videos_per_camera=4)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running desk-scale check")


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """12 rendered videos, proposed and labeled; treat as read-only."""
    root = tmp_path_factory.mktemp("tiny") / "corpus"
    build_corpus(TINY, 1, root)
    corpus = Corpus(root)
    propose_corpus(corpus)
    label_corpus(corpus)
    return Corpus(root)


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    def record(n, ok, detail):
        _ACCEPTANCE[n] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
