"""A published two-torsion, d = 8 phase-encoded objective, as printed (b_{ij}: torsion i, bit j)."""

PRINTED_OBJECTIVE = r"""
-240.7234 - 0.0112 b_{00} b_{12} + 0.0378 b_{10} b_{11} b_{12}
+ 0.0049 b_{10} b_{00} b_{11} b_{01} b_{12} b_{02}
+ 0.0003 b_{00} b_{01} b_{02} + 0.0004 b_{00} b_{11} + 0.0286 b_{11} b_{01}
- 0.0115 b_{10} b_{02} - 0.0118 b_{00} b_{11} b_{01} b_{02}
+ 0.0001 b_{00} b_{01} b_{12} b_{02} - 0.027 b_{12} b_{02}
- 0.0008 b_{10} b_{11} b_{12} b_{02} - 0.0003 b_{10} b_{00} b_{11} b_{12}
- 0.0119 b_{10} b_{11} b_{01} b_{12}
- 0.0003 b_{01} b_{12} - 0.0833 b_{11} - 0.0048 b_{10} b_{00} + 0.001 b_{11} b_{02}
- 0.0002 b_{10} b_{01} - 0.0008 b_{01} + 0.2475 b_{10} + 0.0005 b_{10} b_{00} b_{12}
- 0.0025 b_{00} + 0.0001 b_{10} b_{01} b_{12}
+ 0.0012 b_{10} b_{12} b_{02} - 0.0112 b_{10} b_{12} + 0.5896 b_{12} - 0.0059 b_{02}.
"""

BITS_PER_TORSION = 3
NUM_TERMS = 28  # constant included
VALUE_AT_ALL_UP = -239.9949
TERMS_ABOVE_CENTI = 11
