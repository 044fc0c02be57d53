"""Adaptive convolution-type denoising: estimators, first-order solvers, certificates."""
from .certificates import CertificateState, gap_bound, relative_accuracy
from .convolution import ConvolutionOperator, apply, apply_adjoint, build_operator, norm_1_to_inf, operator_norm_bound
from .errors import ConfigError, DivergedError, InvalidArgument
from .estimators import (
    EstimatorConfig,
    EstimatorSolution,
    default_lambda_ls,
    default_lambda_uf,
    default_r_bar,
    predicted_iterations,
    residual,
    solve,
    statistical_accuracy,
)
from .prox import Penalty, ProximalSetup, make_setup, prox_composite
from .scenarios import Scenario, add_noise, generate_cohsin, generate_modsin, generate_ransin, metrics
from .signals import ComplexSignal, dft, idft, vec, vec_adjoint
from .solvers import CompositeProblem, SaddleProblem, SolveTrace, StoppingRule, cmp_run, cmp_run_adaptive, fgm_run

__version__ = "0.1.0"
