"""
m-subharmonic weights laboratory.

Numerical verification of extremal weights, generalized Lelong numbers and
relative types along complex submanifolds in an exact flat model.
"""

__version__ = "0.1.0"
