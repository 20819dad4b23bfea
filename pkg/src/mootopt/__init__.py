"""Label-frugal multi-objective optimization over MOOT-format tables."""

__version__ = "0.1.0"
