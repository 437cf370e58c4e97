"""Test configuration and shared fixtures."""

import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]

if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))


@pytest.fixture
def tiny():
    """Small vocabulary plus six target samples with short source histories."""
    from src.services.training.gradcheck_suite import tiny_fixture

    return tiny_fixture(0)


@pytest.fixture
def synth_dataset():
    """A small synthetic logit dataset loaded as a CrossDomainDataset."""
    from src.services.data.dataset import CrossDomainDataset
    from src.services.data.synth import SynthSpec, synth_generate

    spec = SynthSpec(
        n_users=60,
        n_items_src=30,
        n_items_tgt=20,
        overlap_frac=0.7,
        seed=3,
        src_events_per_user=6,
        tgt_events_per_user=4,
    )
    result = synth_generate(spec)
    return CrossDomainDataset(result.records, result.side_info, name="synth")
