"""Spectral theory of neutral two-dimensional Markov chains and Yaglom limits of absorbed 2-D chains."""

from .dirichlet import OrderingReport, ordering_report, theta_block, theta_dirichlet
from .errors import (
    DegenerateError,
    EmptyDomain,
    HypothesisError,
    NeutralSpectraError,
    NoConvergence,
    NoSurvivors,
    NotIrreducible,
    NotReversible,
    NotSymmetrizable,
    PoleError,
    StructureError,
    TieToleranceWarning,
    ValidationError,
)
from .kernel_spec import KernelSpec, ReversibleMeasure, birth_death, from_rows, reversible_measure
from .neutral_lift import LiftedChain, TriIndex, lift_block, lift_full, truncate
from .poly_core import ScaledPoly, build_P, eval_P, hahn_H, hahn_Q, orthogonality_sum
from .qsd import (
    A2dMCSpec,
    YaglomReport,
    conditional_law_exact,
    enumerate_qsd,
    extract_blocks,
    from_blocks,
    yaglom_limit,
)
from .simulate import SimConfig, sample_conditional
from .spectral import assemble_basis, perron_pair, sym_eigen, weighted_operator_norm

__version__ = "0.1.0"
