"""Data service exports."""

from .context import HistoryIndex, UserContext, build_context
from .dataset import CrossDomainDataset, Sample
from .ingest import load_interactions, load_side_info
from .split import ColdStartSplit, cold_start_split
from .synth import SynthSpec, synth_generate
from .vocab import ModelVocabulary, Vocabulary

__all__ = [
    "ColdStartSplit",
    "CrossDomainDataset",
    "HistoryIndex",
    "ModelVocabulary",
    "Sample",
    "SynthSpec",
    "UserContext",
    "Vocabulary",
    "build_context",
    "cold_start_split",
    "load_interactions",
    "load_side_info",
    "synth_generate",
]
