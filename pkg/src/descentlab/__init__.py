"""Exact, asymptotic, and simulated laws of descents and inverse descents
of a uniform random permutation."""

from .descent_chain import (
    ChainState,
    JointPmf,
    TransitionWeights,
    eulerian_row,
    exact_joint_pmf,
    quadrant_tail,
    sample_final,
    step,
    transition_weights,
)
from .errors import (
    BoundaryError,
    ConvergenceError,
    DescentLabError,
    DomainError,
    NegativeWeightError,
    SizeLimitError,
)
from .perm_core import descent_count, insert, inverse
from .rate_fn import TiltSolution, cgf, joint_rate, rate, solve_tilt, sum_rate
from .rng import RandomStream

__version__ = "0.1.0"
