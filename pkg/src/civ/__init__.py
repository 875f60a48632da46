"""civ: chart instruction data engine and CQA benchmark harness."""

__version__ = "0.1.0"
