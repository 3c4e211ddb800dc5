"""synthex: few-shot retrieval-augmented extraction of materials synthesis
conditions, with the supporting corpus, retrieval, evaluation, post-processing,
search, and curation machinery."""

from .records import SLOTS, SynthesisRecord

__version__ = "0.1.0"

__all__ = ["SLOTS", "SynthesisRecord", "__version__"]
