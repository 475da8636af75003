"""Bayesian intransitive Bradley-Terry model: Hodge-decomposed match-ups
fitted by Polya-Gamma Gibbs sampling with horseshoe-shrunk curl flows."""

from .complex import (ComplexIndex, OperatorSet, build_complex, build_curl_basis,
                      build_operators, curl_adjoint_apply, curl_apply, grad_adjoint_apply,
                      grad_apply, helmholtzian, hodge_project)
from .measures import (MeasureSummary, credible_interval, global_intransitivity, local_vorticity,
                       posterior_mean, summarize)
from .polya_gamma import pg_draw, pg_draw_many, pg_mean, pg_var
from .sampler import (ChainAbort, ComparisonData, Hyperparams, PosteriorDraws, SamplerState,
                      compute_matchup, run_baseline_chain, run_chain)
from .simulation import SimConfig, StudyReport, generate_synthetic, run_study, run_sweep

__version__ = "0.1.0"
