"""Argument-conclusion corpus toolkit.

Builds clean argument/conclusion corpora from raw dumps, encodes them with
control codes into seq2seq training files, generates extractive conclusions
via sentence-graph centrality, and scores outputs with standard summary
metrics plus annotator-agreement aggregation.
"""

__version__ = "0.1.0"

from .records import ArgConclusionRecord, CorpusVariant, SourceKind, StanceLabel

__all__ = [
    "__version__",
    "ArgConclusionRecord",
    "CorpusVariant",
    "SourceKind",
    "StanceLabel",
]
