import numpy as np
import pytest

from affectfusion.synthdata import SynthSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_synth_dataset(tmp_path_factory):
    """A tiny but learnable dataset shared across tests (2 clips, 160 frames)."""
    out = tmp_path_factory.mktemp("synthdata")
    spec = SynthSpec(clips=2, frames_per_clip=160, seed=7, separability=1.0,
                     drift_period=60)
    return generate(spec, out)
