"""
Gauss-Hermite rules for the weight exp(-u^2)
"""
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from src.models.base import QuadratureRule
from src.models.errors import InvalidInputError


@lru_cache(maxsize=64)
def gauss_hermite_rule(order: int) -> QuadratureRule:
    """
    Nodes are the roots of the physicists' Hermite polynomial H_order; the
    weights sum to sqrt(pi). The rule integrates polynomials of degree up to
    2 * order - 1 exactly.
    """
    if order < 1:
        raise InvalidInputError("quadrature order must be at least 1")
    nodes, weights = roots_hermite(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


@lru_cache(maxsize=64)
def tensor_rule(order: int, dim: int = 2):
    """
    Product grid of a 1-D rule

    Returns:
        (nodes (order**dim, dim), weights (order**dim,)); weights sum to pi**(dim/2)
    """
    rule = gauss_hermite_rule(order)
    grids = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weight_grids = np.meshgrid(*([rule.weights] * dim), indexing="ij")
    weights = np.prod(np.stack([w.reshape(-1) for w in weight_grids], axis=-1), axis=-1)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights
