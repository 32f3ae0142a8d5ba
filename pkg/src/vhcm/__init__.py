"""Machine-learned selection of local and nonlocal regions for 1D variable-horizon coupling."""

__version__ = "0.1.0"
