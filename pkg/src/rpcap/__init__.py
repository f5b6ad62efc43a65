"""Entanglement-assisted capacities of random-parameter quantum channels.

Numerical toolkit for channels whose behavior depends on a classical random
parameter, with side information available causally or non-causally at the
encoder, at the decoder, at both, or not at all: direct maximization of the
capacity objectives, classical baselines, and exact small-block execution of
the matching coding schemes.
"""

__version__ = "0.1.0"

from . import capacity, classical, kernels, mtypes, protosim, qcore, quantum, rpchannel

__all__ = [
    "__version__",
    "capacity",
    "classical",
    "kernels",
    "mtypes",
    "protosim",
    "qcore",
    "quantum",
    "rpchannel",
]
