"""
Clustering diagnostics: information criteria, MAP classification and
entropy-based uncertainty.

BIC is reported on the larger-is-better scale, 2 * loglik - df * log(n),
and ICL = BIC - 2 * E with E the total soft-assignment entropy.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import entr
from sklearn.metrics import adjusted_rand_score


@dataclass(frozen=True)
class CriterionReport:
    loglik: float
    df: int
    n: int
    bic: float
    icl: float
    entropy_total: float
    nec: float


def bic(loglik: float, df: int, n: int) -> float:
    return 2.0 * loglik - df * np.log(n)


def icl(bic_value: float, entropy_total: float) -> float:
    return bic_value - 2.0 * entropy_total


def entropy_measures(z) -> Tuple[np.ndarray, float, float]:
    """Per-row entropy e_i (0 log 0 = 0), total E and NEC = E / (n log G)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n, G = z.shape
    e = entr(z).sum(axis=1)
    total = float(e.sum())
    nec = total / (n * np.log(G)) if G > 1 else 0.0
    return e, total, float(nec)


def map_classify(z) -> Tuple[np.ndarray, np.ndarray]:
    """1-based MAP labels (ties go to the lowest index) and u_i = 1 - max_k z_ik."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    labels = np.argmax(z, axis=1) + 1
    uncertainty = 1.0 - z.max(axis=1)
    return labels, np.clip(uncertainty, 0.0, None)


def adjusted_rand(labels_a, labels_b) -> float:
    labels_a = np.asarray(labels_a).reshape(-1)
    labels_b = np.asarray(labels_b).reshape(-1)
    if labels_a.shape[0] != labels_b.shape[0]:
        raise ValueError(f"partitions have different lengths: {labels_a.shape[0]} vs {labels_b.shape[0]}")
    return float(adjusted_rand_score(labels_a, labels_b))


def criteria(loglik: float, df: int, n: int, z) -> CriterionReport:
    _, total, nec = entropy_measures(z)
    bic_value = bic(loglik, df, n)
    return CriterionReport(
        loglik=float(loglik),
        df=int(df),
        n=int(n),
        bic=float(bic_value),
        icl=float(icl(bic_value, total)),
        entropy_total=total,
        nec=nec,
    )
