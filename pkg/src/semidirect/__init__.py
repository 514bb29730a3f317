"""Aperiodic configurations on Z^2 x| H built from Toeplitz encodings and substitutions."""

from .groups import AutoMatrix, GElem, ModMatrix, Semidirect, group_from_spec, heisenberg
from .flows import recode_subshift, squarefree_flow
from .construction import PointOracle, upsilon_decode, projective_read
from .verify import check_aperiodicity, check_equivariance, scan_rules

__version__ = "0.1.0"
