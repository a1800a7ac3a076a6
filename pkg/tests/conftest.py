import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slate_lens.synth import CorpusGenerator, SynthConfig


@pytest.fixture(scope="session")
def small_bundle():
    """One shared small synthetic corpus; treat as read-only."""
    cfg = SynthConfig(seed=11, n_submissions=60, n_reviewers=30)
    return CorpusGenerator(cfg).generate()


@pytest.fixture(scope="session")
def mixed_bundle():
    """Mixed slate sizes (2/3/4 reviewers) to exercise pair enumeration."""
    cfg = SynthConfig(
        seed=7, n_submissions=50, n_reviewers=30,
        reviewers_per_paper=(0.3, 0.4, 0.3),
    )
    return CorpusGenerator(cfg).generate()
