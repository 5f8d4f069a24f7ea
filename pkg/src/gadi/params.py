"""Theory-based splitting parameters and the spectral-radius bound.

With ``lambda_min, lambda_max`` the extreme eigenvalues of ``H``,
``sigma_max`` the largest singular value of ``S`` and ``p = lambda_max *
sigma_max``:

* HSS: ``alpha = sqrt(lambda_min * lambda_max)``
* GADI-HS: ``omega = 1``, ``alpha = (p + sqrt(p**2 + lambda_min**2 p)) / lambda_min``,
  the minimizer of ``delta(alpha, 1)`` below
* ``delta(alpha, omega) = (alpha**2 + alpha |1 - omega| ||A||_2 + p) /
  (alpha (alpha + lambda_min))`` bounds the spectral radius of the GADI-HS
  iteration operator.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .exceptions import ConfigError, DimensionError
from .krylov import lambda_extremes_spd, matrix_two_norm, sigma_max
from .sparse import SparseMatrix, hs_split


@dataclass(frozen=True)
class SpectralSummary:
    lambda_min: float
    lambda_max: float
    sigma_max: float
    norm_A: float

    def __post_init__(self):
        vals = (self.lambda_min, self.lambda_max, self.sigma_max, self.norm_A)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("spectral summary entries must be finite")
        if not 0.0 < self.lambda_min <= self.lambda_max * (1 + 1e-12):
            raise ConfigError("need 0 < lambda_min <= lambda_max")
        if self.sigma_max < 0.0:
            raise ConfigError("sigma_max must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "SpectralSummary":
        return cls(**json.loads(text))


def summarize_spectrum(A: SparseMatrix, tol: float = 1e-8, max_iter: int = 10000,
                       seed: int = 0) -> SpectralSummary:
    if A.nrows != A.ncols:
        raise DimensionError("summary needs a square matrix")
    H, S = hs_split(A)
    lmin, lmax = lambda_extremes_spd(H, tol, max_iter, seed)
    return SpectralSummary(lmin, lmax, sigma_max(S, tol, max_iter, seed),
                           matrix_two_norm(A, tol, max_iter, seed))


def hss_alpha(s: SpectralSummary) -> float:
    return math.sqrt(s.lambda_min * s.lambda_max)


def gadi_hs_params(s: SpectralSummary):
    """Return ``(alpha, 1.0)`` minimizing ``delta(., 1)``.

    Raises
    ------
    ConfigError
        If ``sigma_max == 0``; the matrix is symmetric and :func:`hss_alpha`
        with ``omega = 0`` applies instead.
    """
    if s.sigma_max <= 0.0:
        raise ConfigError("sigma_max is zero (symmetric matrix): use hss_alpha with omega=0")
    p = s.lambda_max * s.sigma_max
    alpha = (p + math.sqrt(p * p + s.lambda_min ** 2 * p)) / s.lambda_min
    return alpha, 1.0


def delta_bound(alpha: float, omega: float, s: SpectralSummary) -> float:
    if alpha <= 0.0:
        raise ConfigError("alpha must be positive")
    p = s.lambda_max * s.sigma_max
    num = alpha * alpha + alpha * abs(1.0 - omega) * s.norm_A + p
    return num / (alpha * (alpha + s.lambda_min))
