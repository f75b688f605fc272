"""dualrag: dual-retrieval compliance assessment over safety-critical
software documentation, plus a distractor-aware fine-tuning dataset
generator with human-in-the-loop verification."""

__version__ = "0.1.0"
