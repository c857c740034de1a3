"""Batch normalization and the initialization inequality: definitions, a counterexample, a falsifier."""

from .batchnorm import BatchStats, BNParams, batch_stats, bn_network_forward, bn_transform
from .errors import (
    BNFError,
    DegenerateBatch,
    DimensionError,
    GenerationFailed,
    IllConditioned,
    NoConvergence,
    PreconditionUnmet,
    VerificationFailed,
    ZeroOptimum,
)
from .nn_core import (
    ActivationKind,
    Dataset,
    Layer,
    Network,
    Neuron,
    activate,
    batch_output_matrix,
    layer_forward,
    network_forward,
    neuron_forward,
)
from .objective import (
    bn_cost,
    bn_cost_gradient,
    finite_diff_gradient,
    least_squares_fit,
    standard_cost,
    standard_cost_gradient,
)

__version__ = "0.1.0"
