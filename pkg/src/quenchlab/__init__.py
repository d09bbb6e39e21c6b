"""Quenched limit theorems for sums of randomly selected random weights."""

from .environments import (
    IidMoment,
    LayeredStable,
    ParameterError,
    SimplexEq,
    SimplexLe,
    SphereUniform,
    WeightVector,
    sample_environment,
    sample_layered_stable,
    sample_stable_scalar,
    truncate,
)
from .quenched import (
    EmpiricalDistribution,
    Normalization,
    integrate,
    quenched_sum,
    sample_quenched_measure,
    test_function_bank,
)
from .selectors import (
    InfeasibleSchemeError,
    L_statistic,
    UniformPermutation,
    UniformSubset,
    UpRightPath,
    UpRightPathAvoidSquare,
    UpRightPathThrough,
    count_configurations,
    inclusion_probability,
    lambda_fit,
    sample_selection,
)

__version__ = "0.1.0"
