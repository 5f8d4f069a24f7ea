"""One-dimensional Gaussian process regression for predicting ``alpha`` from ``n``.

Kernel: ``k(x, y) = sigma_f**2 * exp(-|x - y| / (2 iota**2))`` (exponential,
unsquared distance). Zero prior mean, targets used raw. Hyperparameters are
fitted by maximizing the log marginal likelihood with L-BFGS in
``(log iota, log sigma_f)`` using central-difference gradients.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .exceptions import DimensionError, FitError

NOISE_DEFAULT = 1e-4
LOG_BOUNDS = ((math.log(1e-3), math.log(1e4)), (math.log(1e-4), math.log(1e4)))
_IOTA_START = (1e-1, 1e2)
_SIGMA_START = (1e-2, 1e1)
_LOG_2PI = math.log(2.0 * math.pi)


def kernel(x, y, iota: float, sigma_f: float):
    """Exponential kernel; broadcasts over ``x`` and ``y``."""
    d = np.abs(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64))
    return sigma_f ** 2 * np.exp(-d / (2.0 * iota ** 2))


def _gram(x, iota, sigma_f, noise):
    K = kernel(x[:, None], x[None, :], iota, sigma_f)
    K[np.diag_indices_from(K)] += noise ** 2
    return K


def log_marginal_likelihood(inputs, targets, iota: float, sigma_f: float,
                            noise: float = NOISE_DEFAULT) -> float:
    """``-y^T K^-1 y / 2 - log det K / 2 - (m/2) log 2 pi`` with ``K = Gram + noise^2 I``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``K`` is not numerically positive definite.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    L = np.linalg.cholesky(_gram(x, iota, sigma_f, noise))
    a = scipy.linalg.solve_triangular(L, y, lower=True)
    return float(-0.5 * a @ a - np.log(np.diag(L)).sum() - 0.5 * len(x) * _LOG_2PI)


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def ci_low(self) -> float:
        return self.mean - 1.96 * self.std

    @property
    def ci_high(self) -> float:
        return self.mean + 1.96 * self.std

    @property
    def ci_width(self) -> float:
        return 2 * 1.96 * self.std


class GprModel:
    """A fitted GP. Inputs are stored raw; the kernel sees ``n / input_scale``."""

    def __init__(self, inputs, targets, iota, sigma_f, noise=NOISE_DEFAULT, input_scale=1.0):
        self.inputs = np.asarray(inputs, dtype=np.float64).copy()
        self.targets = np.asarray(targets, dtype=np.float64).copy()
        if self.inputs.shape != self.targets.shape or self.inputs.ndim != 1:
            raise DimensionError("inputs and targets must be 1-D of equal length")
        if len(np.unique(self.inputs)) != len(self.inputs):
            raise DimensionError("training inputs must be distinct")
        if min(iota, sigma_f, noise, input_scale) <= 0:
            raise DimensionError("hyperparameters must be positive")
        self.iota = float(iota)
        self.sigma_f = float(sigma_f)
        self.noise = float(noise)
        self.input_scale = float(input_scale)
        z = self.inputs / self.input_scale
        self.chol = np.linalg.cholesky(_gram(z, self.iota, self.sigma_f, self.noise))
        self.alpha_weights = scipy.linalg.cho_solve((self.chol, True), self.targets)

    @property
    def theta(self):
        return self.iota, self.sigma_f

    def log_likelihood(self) -> float:
        return log_marginal_likelihood(self.inputs / self.input_scale, self.targets,
                                       self.iota, self.sigma_f, self.noise)

    def predict(self, x_star) -> Prediction:
        z = float(x_star) / self.input_scale
        ks = kernel(self.inputs / self.input_scale, z, self.iota, self.sigma_f)
        mean = float(ks @ self.alpha_weights)
        v = scipy.linalg.solve_triangular(self.chol, ks, lower=True)
        var = max(self.sigma_f ** 2 - float(v @ v), 0.0)
        return Prediction(mean, var)

    def predict_many(self, xs) -> list:
        return [self.predict(x) for x in xs]

    def to_dict(self) -> dict:
        return {"inputs": self.inputs.tolist(), "targets": self.targets.tolist(),
                "iota": self.iota, "sigma_f": self.sigma_f, "noise": self.noise,
                "input_scale": self.input_scale}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d) -> "GprModel":
        return cls(d["inputs"], d["targets"], d["iota"], d["sigma_f"], d["noise"],
                   d.get("input_scale", 1.0))

    @classmethod
    def load(cls, path) -> "GprModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def predict(model: GprModel, x_star) -> Prediction:
    return model.predict(x_star)


def _objective(z, y, noise):
    def f(t):
        try:
            return -log_marginal_likelihood(z, y, math.exp(t[0]), math.exp(t[1]), noise)
        except np.linalg.LinAlgError:
            return np.inf
    return f


def _fd_grad(f, h=1e-5):
    def g(t):
        out = np.empty(len(t))
        for i in range(len(t)):
            step = h * max(1.0, abs(t[i]))
            tp, tm = t.copy(), t.copy()
            tp[i] += step
            tm[i] -= step
            out[i] = (f(tp) - f(tm)) / (2 * step)
        return out
    return g


def _optimize(z, y, noise, starts):
    f = _objective(z, y, noise)
    g = _fd_grad(f)
    best = None
    for t0 in starts:
        t0 = np.clip(np.asarray(t0, dtype=np.float64), [b[0] for b in LOG_BOUNDS],
                     [b[1] for b in LOG_BOUNDS])
        if not np.isfinite(f(t0)):
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = scipy.optimize.minimize(f, t0, jac=g, method="L-BFGS-B", bounds=LOG_BOUNDS,
                                          options={"maxcor": 10, "maxiter": 500})
        if np.isfinite(res.fun) and (best is None or res.fun < best[0]):
            best = (float(res.fun), res.x.copy())
    return best


def fit(inputs: Sequence[float], targets: Sequence[float], noise: float = NOISE_DEFAULT,
        theta0: Optional[tuple] = None, restarts: int = 8, seed: int = 0,
        rescale: bool = True) -> GprModel:
    """Fit ``(iota, sigma_f)`` by multistart L-BFGS on the log marginal likelihood.

    Parameters
    ----------
    theta0 : (iota, sigma_f), optional
        Extra starting point tried before the random restarts.
    restarts : int
        Number of seeded log-uniform starting points.
    rescale : bool
        Divide inputs by their maximum before kernel evaluation.

    Raises
    ------
    FitError
        If no start produced a finite likelihood.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise DimensionError("inputs and targets must be 1-D of equal length")
    if len(np.unique(x)) < 2 or len(np.unique(x)) != len(x):
        raise DimensionError("need at least two distinct inputs and no duplicates")
    scale = float(np.max(np.abs(x))) if rescale else 1.0
    z = x / scale
    rng = np.random.default_rng(seed)
    starts = []
    if theta0 is not None:
        starts.append(np.log(np.asarray(theta0, dtype=np.float64)))
    for _ in range(restarts):
        starts.append(np.array([rng.uniform(*np.log(_IOTA_START)),
                                rng.uniform(*np.log(_SIGMA_START))]))
    best = _optimize(z, y, noise, starts)
    if best is None:
        raise FitError("every restart failed", theta=tuple(theta0) if theta0 else None)
    iota, sigma_f = np.exp(best[1])
    return GprModel(x, y, iota, sigma_f, noise, scale)


def retrain(model: GprModel, new_inputs: Sequence[float]) -> GprModel:
    """Append predicted means at ``new_inputs`` as observations and refit.

    The refit starts from the current hyperparameters only. Inputs already in
    the training set are skipped with a warning.
    """
    xs, ys = list(model.inputs), list(model.targets)
    added = False
    for x in new_inputs:
        x = float(x)
        if x in xs:
            warnings.warn(f"retrain: input {x} already in the training set; skipped")
            continue
        xs.append(x)
        ys.append(model.predict(x).mean)
        added = True
    if not added:
        return model
    z = np.asarray(xs) / model.input_scale
    best = _optimize(z, np.asarray(ys), model.noise, [np.log(model.theta)])
    if best is None:
        raise FitError("retrain refit failed", theta=model.theta)
    iota, sigma_f = np.exp(best[1])
    return GprModel(xs, ys, iota, sigma_f, model.noise, model.input_scale)
