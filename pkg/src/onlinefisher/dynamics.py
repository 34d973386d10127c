"""Bidding dynamics: proportional response, its mirror-descent form, and runs.

Each period every buyer splits their budget over items in proportion to the
utility contributions of the previous allocation:

    b_ij <- B_i * v_ij * x_ij_prev / sum_k v_ik * x_ik_prev.

This closed form is exactly the Bregman step

    argmin_b  <grad phi(b_prev; v_t), b> + KL(b, b_prev)

taken independently per buyer over their budget simplex, which is what
``omd_step_numeric`` solves iteratively as an independent cross-check.  The
``eta`` variant tempers the update, b_ij <- B_i-normalized
b_prev_ij * (v_ij / p_prev_j)^eta, recovering the plain step at eta = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ConvergenceFailure,
    InvalidModelParams,
    MarketError,
    NonPositiveBid,
    NonPositivePrice,
    ZeroUtilityRow,
)
from .input_models import ValueStream, baseline_log_values, mean_values
from .market import MarketInstance, uniform_bids
from .objectives import kl_divergence, shmyrev_objective

# Budget drift tolerated in a raw update before defensive renormalization.
DRIFT_TOL = 1e-12

# Full bid histories are kept only up to this horizon unless forced.
BID_HISTORY_MAX = 1000


class StepRule(enum.Enum):
    """Step-size schedule for the tempered update (applies from period 2 on)."""

    CONSTANT_ONE = "constant_one"
    INVERSE_T = "inverse_t"
    INVERSE_SQRT_T = "inverse_sqrt_t"

    def eta(self, t: int) -> float:
        """Step size at period t >= 1; always in (0, 1]."""
        if t < 1:
            raise ValueError("periods are 1-based")
        if self is StepRule.CONSTANT_ONE:
            return 1.0
        if self is StepRule.INVERSE_T:
            return 1.0 / t
        return 1.0 / math.sqrt(t)


def _renormalize_rows(raw: np.ndarray, budgets: np.ndarray) -> np.ndarray:
    """Snap row sums back to the budgets, asserting the drift was roundoff."""
    sums = raw.sum(axis=1)
    assert np.max(np.abs(sums - budgets)) < DRIFT_TOL, "bid row drifted off budget"
    return raw * (budgets / sums)[:, None]


def pr_step(market: MarketInstance, alloc_prev, values_t) -> np.ndarray:
    """One proportional-response update from the previous allocation."""
    alloc_prev = np.asarray(alloc_prev, dtype=float)
    values_t = np.asarray(values_t, dtype=float)
    weights = values_t * alloc_prev
    totals = weights.sum(axis=1)
    if np.any(totals <= 0.0):
        raise ZeroUtilityRow("a buyer got zero utility from the previous allocation")
    raw = market.budgets[:, None] * weights / totals[:, None]
    return _renormalize_rows(raw, market.budgets)


def pr_step_eta(
    market: MarketInstance, bids_prev, prices_prev, values_t, eta: float
) -> np.ndarray:
    """Tempered update: weights b_prev * (v / p_prev)^eta, renormalized."""
    bids_prev = np.asarray(bids_prev, dtype=float)
    prices_prev = np.asarray(prices_prev, dtype=float)
    values_t = np.asarray(values_t, dtype=float)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if np.any(bids_prev <= 0.0):
        raise NonPositiveBid("tempered update needs strictly positive previous bids")
    if np.any(prices_prev <= 0.0):
        raise NonPositivePrice("tempered update needs strictly positive prices")
    weights = bids_prev * (values_t / prices_prev[None, :]) ** eta
    totals = weights.sum(axis=1)
    if np.any(totals <= 0.0):
        raise ZeroUtilityRow("a buyer's update weights vanished")
    raw = market.budgets[:, None] * weights / totals[:, None]
    return _renormalize_rows(raw, market.budgets)


def omd_step_numeric(
    market: MarketInstance,
    bids_prev,
    prices_prev,
    values_t,
    tol: float = 1e-10,
    max_iter: int = 10**4,
) -> np.ndarray:
    """Solve the per-buyer Bregman step numerically (no closed form used).

    Minimizes <g, b_i> + KL(b_i, b_prev_i) over each buyer's budget simplex,
    where g is the objective gradient at the previous bids, by a damped
    exponentiated-gradient fixed-point iteration (damping 0.5).  Exists purely
    as an independent check on ``pr_step``.
    """
    bids_prev = np.asarray(bids_prev, dtype=float)
    prices_prev = np.asarray(prices_prev, dtype=float)
    values_t = np.asarray(values_t, dtype=float)
    if np.any(bids_prev <= 0.0):
        raise NonPositiveBid("numeric step needs strictly positive previous bids")
    if np.any(prices_prev <= 0.0):
        raise NonPositivePrice("numeric step needs strictly positive prices")

    grad = 1.0 - np.log(values_t) + np.log(prices_prev)[None, :]
    budgets = market.budgets
    damping = 0.5
    b = bids_prev.copy()
    residual = np.inf
    for _ in range(max_iter):
        step = -damping * (grad + np.log(b / bids_prev))
        step -= step.max(axis=1, keepdims=True)
        raw = b * np.exp(step)
        b_new = budgets[:, None] * raw / raw.sum(axis=1, keepdims=True)
        residual = float(np.max(np.abs(b_new - b)))
        b = b_new
        if residual <= tol:
            return b
    raise ConvergenceFailure(
        f"numeric step stuck above tolerance after {max_iter} iterations",
        last_residual=residual,
    )


@dataclass
class Trajectory:
    """Everything recorded along one online run (periods are 1-based).

    ``bids_history`` is None for long runs (horizon > BID_HISTORY_MAX unless
    ``keep_bids`` forced it); the first and last bid matrices survive either
    way.  ``mean_utilities`` tracks sum_j E[v_ij] x_ij_t, the deterministic
    per-period utility proxy, next to the realized ``utilities``.
    """

    market: MarketInstance
    step_rule: StepRule
    horizon: int
    prices: np.ndarray  # (T, M)
    utilities: np.ndarray  # (T, N) realized, with the period's values
    mean_utilities: np.ndarray  # (T, N) against the model's mean values
    sample_phi: np.ndarray  # (T,) objective at realized log-values
    expected_phi: np.ndarray  # (T,) objective at baseline log-values
    bids_first: np.ndarray
    bids_last: np.ndarray
    baseline_log: np.ndarray
    mean_values: np.ndarray
    bids_history: Optional[np.ndarray] = None  # (T, N, M) when kept


@dataclass
class EquilibriumSolution:
    """Fixed point of the deterministic dynamics on the baseline values."""

    bids_star: np.ndarray
    prices_star: np.ndarray
    utilities_star: np.ndarray
    phi_star: float
    iterations: int
    final_kl: float
    baseline_log: np.ndarray


def run_online(
    market: MarketInstance,
    stream: ValueStream,
    horizon: int,
    rule: StepRule = StepRule.CONSTANT_ONE,
    keep_bids: Optional[bool] = None,
) -> Trajectory:
    """Run the online dynamics for ``horizon`` periods against a value stream.

    Period 1 bids the uniform split B_i / M.  Each later period t first draws
    the period's values, then moves bids by proportional response to those
    fresh values using the previous period's allocation (the tempered form
    when the rule is not CONSTANT_ONE), and finally clears the market.  The
    period-t bid is therefore the mirror step taken *on* the period-t
    objective, which is what makes phi(b_t, eps_t) <= phi(b_{t-1}, eps_t)
    hold per period and the realized-objective regret telescope against any
    fixed comparator.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    model = stream.model
    if model.kind == "periodic" and model.partitions * model.partition_len != horizon:
        raise InvalidModelParams(
            f"periodic model covers {model.partitions * model.partition_len} "
            f"periods but the horizon is {horizon}"
        )
    n, m = market.n_buyers, market.n_items
    baseline = baseline_log_values(model, market)
    mean_vals = mean_values(model, market)
    keep = horizon <= BID_HISTORY_MAX if keep_bids is None else keep_bids

    prices_hist = np.empty((horizon, m))
    utils_hist = np.empty((horizon, n))
    mean_utils_hist = np.empty((horizon, n))
    sample_phi = np.empty(horizon)
    expected_phi = np.empty(horizon)
    bids_hist = np.empty((horizon, n, m)) if keep else None

    bids = uniform_bids(market)
    bids_first = bids.copy()
    alloc = None
    prices = None
    for t in range(1, horizon + 1):
        values_t = stream.next_values()
        if t >= 2:
            try:
                if rule is StepRule.CONSTANT_ONE:
                    bids = pr_step(market, alloc, values_t)
                else:
                    bids = pr_step_eta(market, bids, prices, values_t, rule.eta(t))
            except MarketError as exc:
                raise type(exc)(f"period {t}: {exc}") from exc
        prices = bids.sum(axis=0)
        alloc = bids / prices[None, :]
        idx = t - 1
        prices_hist[idx] = prices
        utils_hist[idx] = (values_t * alloc).sum(axis=1)
        mean_utils_hist[idx] = (mean_vals * alloc).sum(axis=1)
        sample_phi[idx] = shmyrev_objective(bids, np.log(values_t), prices=prices)
        expected_phi[idx] = shmyrev_objective(bids, baseline, prices=prices)
        if keep:
            bids_hist[idx] = bids

    return Trajectory(
        market=market,
        step_rule=rule,
        horizon=horizon,
        prices=prices_hist,
        utilities=utils_hist,
        mean_utilities=mean_utils_hist,
        sample_phi=sample_phi,
        expected_phi=expected_phi,
        bids_first=bids_first,
        bids_last=bids.copy(),
        baseline_log=baseline,
        mean_values=mean_vals,
        bids_history=bids_hist,
    )


def solve_equilibrium(
    market: MarketInstance,
    baseline_log,
    tol: float = 1e-12,
    max_iter: int = 10**6,
    mean_vals=None,
) -> EquilibriumSolution:
    """Equilibrium of the deterministic market at the baseline values.

    Iterates proportional response on v = exp(baseline_log) until successive
    iterates stop moving: the price change *and* the bid change must both
    drop below ``tol``, measured by the chi-square quantity sum((p'-p)^2/p)
    which upper-bounds the KL divergence, so the successive-price KL is also
    <= tol at exit.  Prices alone can sit still while bid mass keeps sloshing
    between buyers along price-preserving directions -- any symmetric market
    does this from the very first iterate -- hence the extra bid condition.
    Near the fixed point the raw KL is a sum of cancelling terms and its
    computed value is pure noise; the chi-square form is a sum of positives
    and has no such floor.  The loop runs in extended precision because the
    plain double iteration stalls about 1e-8 short of equalizing
    bang-per-buck whenever supports overlap on near-tied items, which is
    exactly the scale the fairness checks care about.  Double precision
    reaches gaps of ~1e-17 without trouble, so the slower extended arithmetic
    only kicks in for tolerances below the default.  Reported equilibrium
    utilities use ``mean_vals`` when given (the stream's E[v]), else the
    baseline values themselves.
    """
    baseline_log = np.asarray(baseline_log, dtype=float)
    work = np.longdouble if tol < 1e-12 else np.float64
    vbar = np.exp(baseline_log).astype(work)
    budgets = market.budgets.astype(work)
    bids = np.tile((budgets / market.n_items)[:, None], (1, market.n_items))
    prices = bids.sum(axis=0)
    price_gap = np.inf
    for it in range(1, max_iter + 1):
        # bids on a dead (zero-price) column are themselves zero, so the
        # floored denominator leaves their allocation at zero
        alloc = bids / np.maximum(prices, 1e-300)[None, :]
        shares = vbar * alloc
        bids_new = budgets[:, None] * shares / shares.sum(axis=1, keepdims=True)
        # non-support bids decay geometrically forever and spend thousands of
        # iterations as subnormals, where x86 arithmetic is ~10x slower; the
        # true equilibrium has exact zeros there, so flush early
        bids_new[bids_new < 1e-250] = 0.0
        prices_new = bids_new.sum(axis=0)
        price_gap = float(
            (np.square(prices_new - prices) / np.maximum(prices, 1e-300)).sum()
        )
        # the matrix-sized bid gap is only worth computing once prices are
        # already at tolerance (it is the binding condition of the two)
        if price_gap <= tol:
            bid_gap = float(
                (np.square(bids_new - bids) / np.maximum(bids, 1e-300)).sum()
            )
            if bid_gap <= tol:
                prices_prev = prices
                bids, prices = bids_new, prices_new
                break
        bids, prices = bids_new, prices_new
    else:
        raise ConvergenceFailure(
            f"equilibrium iteration still above tolerance after {max_iter} rounds",
            last_residual=price_gap,
        )
    mask = prices > 0
    kl = float(max((prices[mask] * np.log(prices[mask] / prices_prev[mask])).sum(), 0.0))
    bids_f = bids.astype(float)
    prices_f = bids_f.sum(axis=0)
    alloc_f = bids_f / np.where(prices_f > 0, prices_f, 1.0)[None, :]
    value_basis = np.exp(baseline_log) if mean_vals is None else np.asarray(mean_vals, dtype=float)
    return EquilibriumSolution(
        bids_star=bids_f,
        prices_star=prices_f,
        utilities_star=(value_basis * alloc_f).sum(axis=1),
        phi_star=shmyrev_objective(bids_f, baseline_log, prices=prices_f),
        iterations=it,
        final_kl=kl,
        baseline_log=baseline_log.copy(),
    )
