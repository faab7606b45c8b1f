"""unipar: aligned parallel-kernel corpora and LLM translation evaluation."""

__version__ = "0.1.0"
