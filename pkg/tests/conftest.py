import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from imugest.features import extract_features  # noqa: E402
from imugest.signal_io import segment_recording  # noqa: E402
from imugest.synth import SynthSpec, generate_recording  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def default_recording():
    spec = SynthSpec()
    rec, labels = generate_recording(spec, "subject1")
    return spec, rec, labels


@pytest.fixture(scope="session")
def accel_matrix(default_recording):
    spec, rec, labels = default_recording
    segs = segment_recording(rec.select("accelerometer"), spec.protocol, labels)
    return extract_features(segs, 4)
