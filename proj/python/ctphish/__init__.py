"""Python access to the ctphish certificate phishing detector."""

import json

from . import _core
from ._core import (
    Error,
    Model,
    combine_meta,
    decompose_domain,
    feature_names,
    features,
    ngram_stats,
    pem_to_der,
    roc,
    run_cli,
    shannon_entropy,
    threshold_at_fpr,
)

__version__ = "0.1.0"


def parse_der(der: bytes) -> dict:
    """Certificate record as a dict."""
    return json.loads(_core.parse_der_json(der))


__all__ = [
    "Error",
    "Model",
    "combine_meta",
    "decompose_domain",
    "feature_names",
    "features",
    "ngram_stats",
    "parse_der",
    "pem_to_der",
    "roc",
    "run_cli",
    "shannon_entropy",
    "threshold_at_fpr",
]
