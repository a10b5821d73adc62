"""Reference consumer of the corpus contract: fine-tune, beam-generate, emit predictions."""

__version__ = "0.1.0"
