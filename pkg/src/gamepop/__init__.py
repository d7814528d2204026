"""Predicting early player counts of video games from catalog features.

The pipeline runs offline scrape cleaning (`ingest`), feature
construction (`features`), six Bayesian regression variants built on a
folded-normal or normal likelihood (`models`, `distributions`), a
self-contained no-U-turn sampler (`sampler`), convergence and
predictive-fit diagnostics (`diagnostics`, `evaluation`), posterior
interpretation (`analysis`), and synthetic data with known ground truth
(`synthetic`).  The ``gamepop`` command exposes the whole pipeline.
"""

from .distributions import (
    FoldedNormalParams,
    folded_normal_cdf,
    folded_normal_logpdf,
    folded_normal_mean,
    folded_normal_pdf,
    folded_normal_sample,
)
from .evaluation import LooResult, compare_models, elpd_loo, exact_loo, psis_smooth
from .features import ModelData, TrainingStats, build_model_data, cyclic_encode, log_ratio_transform
from .ingest import GameRecord, IngestResult, convert_price, extract_storage_mb, ingest_catalog
from .models import ModelSpec, ParamVector, PosteriorTarget, log_posterior, log_posterior_gradient
from .sampler import PosteriorSamples, SamplerConfig, sample_posterior
from .diagnostics import ess, rhat
from .synthetic import SyntheticSpec, generate

__version__ = "0.1.0"

__all__ = [
    "FoldedNormalParams",
    "folded_normal_cdf",
    "folded_normal_logpdf",
    "folded_normal_mean",
    "folded_normal_pdf",
    "folded_normal_sample",
    "LooResult",
    "compare_models",
    "elpd_loo",
    "exact_loo",
    "psis_smooth",
    "ModelData",
    "TrainingStats",
    "build_model_data",
    "cyclic_encode",
    "log_ratio_transform",
    "GameRecord",
    "IngestResult",
    "convert_price",
    "extract_storage_mb",
    "ingest_catalog",
    "ModelSpec",
    "ParamVector",
    "PosteriorTarget",
    "log_posterior",
    "log_posterior_gradient",
    "PosteriorSamples",
    "SamplerConfig",
    "sample_posterior",
    "ess",
    "rhat",
    "SyntheticSpec",
    "generate",
    "__version__",
]
