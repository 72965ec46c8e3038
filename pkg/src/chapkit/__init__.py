"""chapkit: chapter generation and evaluation for long spoken-word transcripts."""

__version__ = "0.1.0"
