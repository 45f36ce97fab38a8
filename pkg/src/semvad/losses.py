"""Frame-level cross-entropy and the weighted joint objective.

The ASR term is supplied by the caller as a scalar; only the combination is
computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import POSTERIOR_SUM_TOL

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    mu: float = 0.2  # punctuation
    lam: float = 0.2  # ASR

    def __post_init__(self):
        errors = []
        for name, v in (("mu", self.mu), ("lambda", self.lam)):
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                errors.append(f"{name} must be in [0, 1], got {v!r}")
        if not errors and self.mu + self.lam > 1.0:
            errors.append(f"mu + lambda = {self.mu + self.lam} exceeds 1")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def vad_weight(self) -> float:
        return 1.0 - self.mu - self.lam


def frame_cross_entropy(posteriors, labels, check: bool = True) -> float:
    """Mean over frames of ``-log p[label]``, with ``p`` floored at 1e-12.

    ``check=False`` skips the distribution test; the finite-difference
    checks need to evaluate slightly off the simplex.
    """
    p = np.asarray(posteriors, dtype=np.float64)
    y = np.asarray(labels)
    if p.ndim != 2 or p.shape[0] != y.shape[0]:
        raise ValueError(f"{p.shape[0] if p.ndim else 0} posteriors vs {y.shape[0]} labels")
    if len(y) == 0:
        raise ValueError("cross-entropy of zero frames")
    if not np.issubdtype(y.dtype, np.integer) or y.min() < 0 or y.max() >= p.shape[1]:
        raise ValueError(f"labels must be integers in [0, {p.shape[1]})")
    if check:
        bad = ~((p >= 0) & (p <= 1)).all(axis=1) | (np.abs(p.sum(axis=1) - 1.0) > POSTERIOR_SUM_TOL)
        if bad.any():
            raise ValueError(f"row {int(np.flatnonzero(bad)[0])} is not a probability distribution")
    picked = np.maximum(p[np.arange(len(y)), y], PROB_FLOOR)
    # + 0.0 turns -0.0 into 0.0
    return float(-np.mean(np.log(picked))) + 0.0


def joint_loss(l_punc: float, l_asr: float, l_vad: float, w: LossWeights) -> float:
    for name, v in (("l_punc", l_punc), ("l_asr", l_asr), ("l_vad", l_vad)):
        if not math.isfinite(v):
            raise ValueError(f"{name} is not finite: {v}")
    return w.mu * l_punc + w.lam * l_asr + (1.0 - w.mu - w.lam) * l_vad
