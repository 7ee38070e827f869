"""Exact computations with isomorphic embeddings ``C(K) -> C(L)`` for
countable compacta of Cantor-Bendixson rank at most one."""
from __future__ import annotations

from .calculus import Fixed, Fn, Indexed, Meas, MeasPath
from .constructions import filtration, local_witness, phi_r, pi_base, top_level_witness
from .kernels import Kernel, ResidueClass, Template, apply, checked, operator_norm, validate_kernel
from .norms import embedding_constant, lattice_oracle
from .reductions import adjoin_and_lift, envelope, normalize_positive, pipeline, positive_reduction
from .setmaps import SetMap, SetTemplate
from .spaces import INF, Block, Point, SpaceDesc, SubsetDesc, Trace

__version__ = "0.1.0"

__all__ = [
    "INF", "Block", "Fixed", "Fn", "Indexed", "Kernel", "Meas", "MeasPath", "Point", "ResidueClass",
    "SetMap", "SetTemplate", "SpaceDesc", "SubsetDesc", "Template", "Trace", "adjoin_and_lift", "apply",
    "checked", "embedding_constant", "envelope", "filtration", "lattice_oracle", "local_witness",
    "normalize_positive", "operator_norm", "phi_r", "pi_base", "pipeline", "positive_reduction",
    "top_level_witness", "validate_kernel",
]
