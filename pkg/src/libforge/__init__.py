"""Library learning by execution-verified program refactoring."""

__version__ = "0.1.0"
