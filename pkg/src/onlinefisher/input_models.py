"""Stochastic valuation streams layered on top of a market's base values.

Four noise kinds drive the per-period draws:

* ``stationary`` - i.i.d. N(0, sigma^2) per entry per period.
* ``corrupted``  - per period a single scalar mean-shift mu_t ~ U[-mu_range,
  mu_range] is drawn fresh and shared by every entry; entries are then
  N(mu_t, sigma^2).
* ``ergodic``    - per-entry AR(1): eps_t = alpha * eps_{t-1} + beta_t with
  beta_t ~ N(0, sigma^2) and eps_0 = 0.
* ``periodic``   - a fixed set of ``partition_len`` scalar shifts is drawn
  once from U[-mu_range, mu_range]; each partition replays the whole set in
  a freshly permuted order, one shift per period, with N(shift, sigma^2)
  entries.

Two injections map noise into valuations: ``multiplicative_log`` sets
v = v0 * exp(eps) and ``additive_clipped`` sets v = max(v0 + eps, floor).
Either way the result is clipped below at ``VALUE_FLOOR``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidModelParams
from .market import MarketInstance

VALUE_FLOOR = 1e-9

KINDS = ("stationary", "corrupted", "ergodic", "periodic")
INJECTIONS = ("multiplicative_log", "additive_clipped")

# Monte-Carlo settings for the additive-injection baseline estimate.
_MC_SAMPLES = 10**6
_MC_SEED = 20240917


@dataclass(frozen=True)
class NoiseModel:
    """Parameters of one valuation stream; unused fields stay at 0."""

    kind: str
    sigma: float = 0.0
    alpha: float = 0.0
    mu_range: float = 0.0
    partitions: int = 0
    partition_len: int = 0
    injection: str = "multiplicative_log"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModelParams(f"unknown noise kind {self.kind!r}")
        if self.injection not in INJECTIONS:
            raise InvalidModelParams(f"unknown injection {self.injection!r}")
        if self.sigma < 0.0:
            raise InvalidModelParams("sigma must be >= 0")
        if self.kind == "ergodic" and not (0.0 <= self.alpha < 1.0):
            raise InvalidModelParams("ergodic alpha must lie in [0, 1)")
        if self.kind in ("corrupted", "periodic") and self.mu_range < 0.0:
            raise InvalidModelParams("mu_range must be >= 0")
        if self.kind == "periodic" and (self.partitions < 1 or self.partition_len < 1):
            raise InvalidModelParams(
                "periodic needs partitions >= 1 and partition_len >= 1"
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "alpha": self.alpha,
            "mu_range": self.mu_range,
            "partitions": self.partitions,
            "partition_len": self.partition_len,
            "injection": self.injection,
        }


class ValueStream:
    """Stateful per-period valuation generator; deterministic given its seed."""

    def __init__(self, model: NoiseModel, market: MarketInstance, seed: int):
        self.model = model
        self.market = market
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._t = 0
        if model.kind == "ergodic":
            self._eps_prev = np.zeros_like(market.values)
        if model.kind == "periodic":
            self._shifts = self._rng.uniform(
                -model.mu_range, model.mu_range, model.partition_len
            )
            self._perm = None

    @property
    def period(self) -> int:
        """Number of periods emitted so far."""
        return self._t

    def _next_eps(self) -> np.ndarray:
        model = self.model
        shape = self.market.values.shape
        if model.kind == "stationary":
            return self._rng.normal(0.0, model.sigma, shape)
        if model.kind == "corrupted":
            mu = self._rng.uniform(-model.mu_range, model.mu_range)
            return self._rng.normal(mu, model.sigma, shape)
        if model.kind == "ergodic":
            beta = self._rng.normal(0.0, model.sigma, shape)
            self._eps_prev = model.alpha * self._eps_prev + beta
            return self._eps_prev
        # periodic: walk the permuted shift set, reshuffling per partition
        pos = (self._t - 1) % model.partition_len
        if pos == 0:
            self._perm = self._rng.permutation(model.partition_len)
        shift = self._shifts[self._perm[pos]]
        return self._rng.normal(shift, model.sigma, shape)

    def next_values(self) -> np.ndarray:
        """Draw the next period's valuation matrix (clipped at VALUE_FLOOR)."""
        self._t += 1
        eps = self._next_eps()
        if self.model.injection == "multiplicative_log":
            vals = self.market.values * np.exp(eps)
        else:
            vals = self.market.values + eps
        return np.maximum(vals, VALUE_FLOOR)


def make_stream(model: NoiseModel, market: MarketInstance, seed: int) -> ValueStream:
    """Construct a valuation stream (validates model parameters)."""
    if not isinstance(model, NoiseModel):
        raise InvalidModelParams("model must be a NoiseModel")
    return ValueStream(model, market, seed)


def _marginal_sd(model: NoiseModel) -> float:
    """Std. dev. of the time-averaged Gaussian part of the noise."""
    if model.kind == "ergodic":
        return model.sigma / np.sqrt(1.0 - model.alpha**2)
    return model.sigma


def baseline_log_values(model: NoiseModel, market: MarketInstance) -> np.ndarray:
    """Time-averaged expected log-valuations E[log v_ij].

    Multiplicative injection: every kind has zero-mean noise on average, so
    this is exactly log(v0).  Additive injection: estimated entrywise by
    Monte-Carlo (10^6 draws from the time-averaged noise marginal, fixed
    internal seed) since the clip makes the expectation non-elementary.
    """
    v0 = market.values
    if model.injection == "multiplicative_log":
        return np.log(v0)

    rng = np.random.default_rng(_MC_SEED)
    eps = rng.normal(0.0, _marginal_sd(model), _MC_SAMPLES)
    if model.kind in ("corrupted", "periodic") and model.mu_range > 0.0:
        eps = eps + rng.uniform(-model.mu_range, model.mu_range, _MC_SAMPLES)
    flat = v0.ravel()
    out = np.empty(flat.shape)
    chunk = max(1, int(2e7 // _MC_SAMPLES))
    for start in range(0, flat.size, chunk):
        block = flat[start : start + chunk, None] + eps[None, :]
        np.maximum(block, VALUE_FLOOR, out=block)
        np.log(block, out=block)
        out[start : start + chunk] = block.mean(axis=1)
    return out.reshape(v0.shape)


def mean_values(model: NoiseModel, market: MarketInstance) -> np.ndarray:
    """Time-averaged expected valuations E[v_ij].

    Multiplicative injection uses the lognormal moment v0 * E[exp(eps)] with
    the time-averaged noise marginal; the uniform mean-shift kinds pick up
    the extra factor sinh(r)/r.  Additive injection returns v0: for any sane
    configuration (v0 a few sigma above the floor) the clip shifts the mean
    by less than 1e-12.
    """
    v0 = market.values
    if model.injection == "additive_clipped":
        return v0.copy()
    factor = float(np.exp(0.5 * _marginal_sd(model) ** 2))
    if model.kind in ("corrupted", "periodic") and model.mu_range > 0.0:
        r = model.mu_range
        factor *= float(np.sinh(r) / r)
    return v0 * factor
