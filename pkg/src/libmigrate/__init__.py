"""LLM-driven library migration harness with replayable completions and migration metrics."""

__version__ = "0.1.0"
