"""Closed-form predictions for the two-part decoder."""
from .analysis import Part1Params, contributor_weights, fa_noise_power, p_eps_d, \
    p_eps_d_gaussian, p_eps_d_laplace, p_fa, p_fa_at, p_md, part2_dims, prior_x_T
from .se import SEResult, TheoryReport, build_prior_table, joint_cf_finite, joint_cf_limit, \
    make_denoiser, predict_sdr, state_evolution, summarize_part1, theory_report
from .tradeoff import Frontier, RuntimeModel, envelope, fit_runtime_model, split_measurements, \
    sweep_tradeoff
