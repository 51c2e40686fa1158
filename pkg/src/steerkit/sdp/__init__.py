"""Embedded conic solver for block Hermitian semidefinite programs."""

from .ipm import solve
from .problem import FREE, PSD, BlockSdpProblem, BlockSpec, SdpSolution, Status

__all__ = ["solve", "BlockSdpProblem", "BlockSpec", "SdpSolution", "Status", "PSD", "FREE"]
