"""Fleiss' kappa inter-rater agreement with a large-sample significance test.

Input is the usual subjects x categories matrix of rater counts (every
subject rated by the same number of raters). Alongside kappa, the report
carries z and a two-sided p-value from the Fleiss (1971) large-sample
standard error under the null hypothesis of chance-only agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import WeatError


class RaggedMatrix(WeatError):
    pass


class DegenerateAgreement(WeatError):
    pass


@dataclass
class AgreementReport:
    """Kappa plus the significance test and the matrix dimensions."""

    kappa: float
    z: float
    p_value: float
    n_subjects: int
    n_raters: int
    n_categories: int


def fleiss_kappa(counts) -> AgreementReport:
    """Compute Fleiss' kappa for a subjects x categories count matrix.

    Per-subject agreement is P_i = (sum_j n_ij^2 - n) / (n (n - 1)); kappa
    compares the mean observed agreement with the chance agreement implied
    by the marginal category proportions. Kappa is exactly 1 when all
    raters agree on every subject.

    Args:
        counts: 2-D array-like; entry (i, j) is how many raters put
            subject i into category j. Every row must sum to the same
            number of raters n >= 2.

    Raises:
        RaggedMatrix: Non-rectangular input or unequal/too-small row sums.
        DegenerateAgreement: A single category received every rating, so
            chance agreement is 1 and kappa is undefined.
    """
    try:
        table = np.asarray(counts, dtype=float)
    except ValueError as exc:
        raise RaggedMatrix(f"counts is not rectangular: {exc}") from exc
    if table.ndim != 2 or table.size == 0:
        raise RaggedMatrix("counts must be a non-empty 2-D matrix")
    if (table < 0).any() or (table != np.floor(table)).any():
        raise RaggedMatrix("counts must be non-negative integers")

    n_subjects, n_categories = table.shape
    row_sums = table.sum(axis=1)
    n_raters = int(row_sums[0])
    if not (row_sums == n_raters).all():
        raise RaggedMatrix("every subject needs the same number of ratings")
    if n_raters < 2:
        raise RaggedMatrix("at least two raters per subject are required")

    total = table.sum()
    category_proportions = table.sum(axis=0) / total
    expected = float((category_proportions**2).sum())
    if expected >= 1.0:
        raise DegenerateAgreement(
            "all ratings fall in a single category; kappa is undefined"
        )

    per_subject = ((table**2).sum(axis=1) - n_raters) / (n_raters * (n_raters - 1))
    observed = float(per_subject.mean())
    kappa = (observed - expected) / (1.0 - expected)

    # Fleiss 1971 standard error under H0 (chance-only agreement).
    q = float((category_proportions * (1.0 - category_proportions)).sum())
    inner = q * q - float(
        (
            category_proportions
            * (1.0 - category_proportions)
            * (1.0 - 2.0 * category_proportions)
        ).sum()
    )
    se = (
        math.sqrt(2.0 / (n_subjects * n_raters * (n_raters - 1)))
        * math.sqrt(max(inner, 0.0))
        / q
    )
    z = kappa / se if se > 0 else math.inf * math.copysign(1.0, kappa)
    p_value = math.erfc(abs(z) / math.sqrt(2.0)) if math.isfinite(z) else 0.0

    return AgreementReport(
        kappa=float(kappa),
        z=float(z),
        p_value=float(p_value),
        n_subjects=int(n_subjects),
        n_raters=n_raters,
        n_categories=int(n_categories),
    )
