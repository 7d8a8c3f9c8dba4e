"""Paper-style figures rendered from vshmm CSV/JSON artifacts.

This package never recomputes numerics: every figure is a direct view of
the experiment runner's output files.
"""

__version__ = "0.1.0"
