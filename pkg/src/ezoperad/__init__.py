"""ezoperad: exact simplicial operads, homotopy transfer, and conformal checks.

All arithmetic is exact over the rationals.  See the README for the layout.
"""

__version__ = "0.1.0"
