"""Knowledge-graph completion with contextual dictionary lookup for relations."""

from .config import PRESETS, TrainConfig
from .data import SynthSpec, TripleStore, Vocab, generate_synthetic, load_data, load_splits

__all__ = [
    "PRESETS",
    "SynthSpec",
    "TrainConfig",
    "TripleStore",
    "Vocab",
    "generate_synthetic",
    "load_data",
    "load_splits",
]
