from divexp.learners.fourier import FourierBasis, FourierQ, QPolicy, policy_from_q
from divexp.learners.fqi import fqi_learn, FQIConfig, FqiLearner
from divexp.learners.search import (ESConfig, EsLearner, SoftmaxPolicy, TabularSoftmaxParams,
                                    es_policy_search, is_objective)
from divexp.learners.candidates import bootstrap_per_iteration, gen_candidate_policies

__all__ = ["FourierBasis", "FourierQ", "QPolicy", "policy_from_q", "fqi_learn", "FQIConfig",
           "FqiLearner", "ESConfig", "EsLearner", "SoftmaxPolicy", "TabularSoftmaxParams",
           "es_policy_search", "is_objective", "bootstrap_per_iteration", "gen_candidate_policies"]
