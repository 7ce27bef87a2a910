"""Movement-centric spatial audio scenes, QA items, temporal masking and evaluation."""

__version__ = "0.1.0"
