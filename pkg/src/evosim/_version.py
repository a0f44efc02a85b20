"""Single source for the version string (keep in sync with pyproject.toml)."""

__version__ = "0.1.0"
