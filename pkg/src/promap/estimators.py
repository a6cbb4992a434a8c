"""scikit-learn style estimators around the two mapping pipelines.

The mappers behave like clusterers: ``fit`` takes a task graph (a Graph,
a scipy sparse adjacency, or a dense square matrix whose entries are edge
weights) and produces per-vertex PE labels in ``labels_`` together with
the achieved communication cost.  ``fit_predict`` returns the labels
directly, and parameters round-trip through ``get_params``/``set_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .graph import as_graph
from .mapping import total_cost, undirected_cost
from .pipelines import hierarchical_multisection, integrated_map
from .topology import Topology, parse_distances, parse_hierarchy


def _as_topology(hierarchy, distances) -> Topology:
    h = parse_hierarchy(hierarchy) if isinstance(hierarchy, str) else tuple(hierarchy)
    d = parse_distances(distances) if isinstance(distances, str) else tuple(distances)
    return Topology(h, d)


class _BaseMapper(ClusterMixin, BaseEstimator):
    """Shared fit plumbing; subclasses provide the pipeline call."""

    def __init__(self, hierarchy="4:8:6", distances="1:10:100", epsilon=0.03, seed=0):
        self.hierarchy = hierarchy
        self.distances = distances
        self.epsilon = epsilon
        self.seed = seed

    def _run(self, g, t):
        raise NotImplementedError

    def fit(self, X, y=None, vertex_weights=None):
        """Compute a mapping for the task graph X.

        X may be a Graph, a symmetric scipy sparse matrix, or a dense
        square array; matrix entries are integer edge weights and the
        diagonal must be zero.  ``vertex_weights`` overrides the unit
        default for matrix inputs.
        """
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        t = _as_topology(self.hierarchy, self.distances)
        g = as_graph(X, vertex_weights)
        if g.n == 0:
            raise ValueError("cannot map an empty graph")
        m = self._run(g, t)
        l_max = (1.0 + self.epsilon) * g.total_weight / t.k
        self.labels_ = m.assignment
        self.cost_ = total_cost(g, t, m.assignment)
        self.undirected_cost_ = undirected_cost(self.cost_)
        self.max_block_weight_ = m.max_block_weight()
        self.balanced_ = bool(m.is_balanced(l_max))
        self.n_blocks_ = t.k
        return self


class MultisectionMapper(_BaseMapper):
    """Maps by recursive multisection along the machine hierarchy."""

    def _run(self, g, t):
        return hierarchical_multisection(g, t, self.epsilon, seed=self.seed)


class IntegratedMapper(_BaseMapper):
    """Maps with the integrated multilevel pipeline (coarsen, map, refine)."""

    def __init__(
        self,
        hierarchy="4:8:6",
        distances="1:10:100",
        epsilon=0.03,
        seed=0,
        coarsest_factor=128,
        phi=0.999,
        rho=2,
        filter_mode="nonneg",
        jet_filter_c=0.25,
        sigma_coarse=0.065,
        sigma_fine=0.005,
        iw_max_finest=10,
    ):
        super().__init__(hierarchy, distances, epsilon, seed)
        self.coarsest_factor = coarsest_factor
        self.phi = phi
        self.rho = rho
        self.filter_mode = filter_mode
        self.jet_filter_c = jet_filter_c
        self.sigma_coarse = sigma_coarse
        self.sigma_fine = sigma_fine
        self.iw_max_finest = iw_max_finest

    def _run(self, g, t):
        return integrated_map(
            g, t, self.epsilon, seed=self.seed,
            coarsest_factor=self.coarsest_factor, phi=self.phi, rho=self.rho,
            filter_mode=self.filter_mode, jet_filter_c=self.jet_filter_c,
            sigma_coarse=self.sigma_coarse, sigma_fine=self.sigma_fine,
            iw_max_finest=self.iw_max_finest,
        )
