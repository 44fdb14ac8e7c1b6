import numpy as np
import pytest

from pcgkit.dataio import DatasetManifest, Record, synth_corpus
from pcgkit.features import build_feature_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_manifest(rows):
    """rows: iterable of (path, label, patient_id, split)."""
    return DatasetManifest([Record(p, lab, pid, split) for p, lab, pid, split in rows])


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory):
    """30 patients x 3 recordings: 15 normal, 10 murmur, 5 extrasystole."""
    out = tmp_path_factory.mktemp("corpus")
    manifest = synth_corpus(out, n_normal=15, n_murmur=10, n_extrasys=5, per_patient=3,
                            duration_s=6.0, noise_rms=0.01, seed=3)
    return manifest


@pytest.fixture(scope="session")
def corpus_features(synthetic_corpus):
    return build_feature_matrix(synthetic_corpus)


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, text = marker.args
    status = _ACCEPTANCE.get(number, ("PASS", text))[0]
    if rep.skipped:
        status = "SKIP"
    elif rep.failed:
        status = "FAIL"
    elif rep.when == "call" and status != "FAIL":
        status = "PASS"
    _ACCEPTANCE[number] = (status, text)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, text = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {text}")
