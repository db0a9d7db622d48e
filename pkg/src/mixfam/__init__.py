"""Information geometry of finite mixtures with fixed component distributions.

The package covers four connected pieces:

* exact and Monte-Carlo f-divergence machinery with CLT confidence
  intervals (`mixfam.divergence`),
* the dually flat structure the KL divergence induces on the family --
  convex potentials, dual coordinates, Fisher metric, Bregman/canonical
  divergence identities (`mixfam.geometry`),
* divergence inequalities and closure results (`mixfam.bounds`),
* distributed weight estimation with lossless KL-averaging aggregation and
  Bregman k-means (`mixfam.aggregation`).

All logarithms are natural; all randomness flows through caller-supplied
integer seeds.
"""

__version__ = "0.1.0"

from .components import (
    Cauchy,
    Component,
    ComponentBasis,
    FinitePmf,
    Gaussian,
    Laplace,
    check_linear_independence,
    pairwise_bhattacharyya,
    pairwise_kl,
)
from .divergence import (
    DivergenceGenerator,
    McEstimate,
    discrete_fdiv,
    dual_generator,
    extend_generator,
    generator,
    mc_fdivergence,
    mc_kl_extended,
    reflexivity_break,
    shift_generator,
    symmetrize_generator,
    vajda_bound,
)
from .mixture import Mixture, convex_combine, eta_to_weights, weights_to_eta

__all__ = [
    "Cauchy",
    "Component",
    "ComponentBasis",
    "DivergenceGenerator",
    "FinitePmf",
    "Gaussian",
    "Laplace",
    "McEstimate",
    "Mixture",
    "check_linear_independence",
    "convex_combine",
    "discrete_fdiv",
    "dual_generator",
    "eta_to_weights",
    "extend_generator",
    "generator",
    "mc_fdivergence",
    "mc_kl_extended",
    "pairwise_bhattacharyya",
    "pairwise_kl",
    "reflexivity_break",
    "shift_generator",
    "symmetrize_generator",
    "vajda_bound",
    "weights_to_eta",
]
