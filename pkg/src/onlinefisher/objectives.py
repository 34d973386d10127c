"""Spending-space objective, its gradient, and the divergences built on it.

The central object is the convex function

    phi(b; logv) = - sum_ij b_ij * logv_ij + sum_j p_j * log p_j,   p = col sums of b,

whose minimizer over the product of per-buyer budget simplices is the market
equilibrium bid profile.  Evaluated at the baseline (expected) log-values it
is the population objective; evaluated at one period's realized log-values it
is that period's sample objective.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, SupportMismatch, ZeroPrice, ZeroUtility


def _xlogx(p: np.ndarray) -> np.ndarray:
    """Entrywise p*log(p) with the 0*log(0) = 0 convention."""
    out = np.zeros_like(p)
    mask = p > 0.0
    out[mask] = p[mask] * np.log(p[mask])
    return out


def shmyrev_objective(bids, log_values, prices=None) -> float:
    """Value of phi at a bid matrix for the given entrywise log-values.

    ``prices`` may be passed to reuse column sums already computed by the
    caller; otherwise they are recomputed here.
    """
    bids = np.asarray(bids, dtype=float)
    log_values = np.asarray(log_values, dtype=float)
    if bids.shape != log_values.shape:
        raise DimensionMismatch(
            f"bids {bids.shape} and log-values {log_values.shape} differ in shape"
        )
    if prices is None:
        prices = bids.sum(axis=0)
    return float(-(bids * log_values).sum() + _xlogx(prices).sum())


def expected_objective(bids, baseline_log_values, prices=None) -> float:
    """Population objective: phi evaluated at the baseline E[log v].

    phi is linear in the log-values, so plugging the expected log-values in
    gives the exact expectation of the sample objective.
    """
    return shmyrev_objective(bids, baseline_log_values, prices=prices)


def shmyrev_gradient(bids, log_values) -> np.ndarray:
    """Gradient of phi: d phi / d b_ij = 1 - logv_ij + log p_j.

    Requires every item to carry positive spend (ZeroPrice otherwise).
    """
    bids = np.asarray(bids, dtype=float)
    log_values = np.asarray(log_values, dtype=float)
    if bids.shape != log_values.shape:
        raise DimensionMismatch(
            f"bids {bids.shape} and log-values {log_values.shape} differ in shape"
        )
    prices = bids.sum(axis=0)
    if np.any(prices <= 0.0):
        raise ZeroPrice("gradient undefined at zero-price items")
    return 1.0 - log_values + np.log(prices)[None, :]


def eg_sample_objective(bids, values, budgets) -> float:
    """Budget-weighted negative log utility of the trading-post allocation.

    Returns -sum_i B_i log(u_i) where u_i is buyer i's utility under the
    allocation that the bid matrix induces.  Every buyer must end up with
    positive utility (ZeroUtility otherwise).
    """
    bids = np.asarray(bids, dtype=float)
    values = np.asarray(values, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    prices = bids.sum(axis=0)
    alloc = bids / np.where(prices > 0.0, prices, 1.0)
    utils = (values * alloc).sum(axis=1)
    if np.any(utils <= 0.0):
        raise ZeroUtility("every buyer needs positive utility for the log objective")
    return float(-(budgets * np.log(utils)).sum())


def kl_divergence(p, q) -> float:
    """Generalized KL divergence sum_k p_k log(p_k / q_k), flattening inputs.

    Zero entries of p contribute nothing; a positive p_k over q_k = 0 is a
    SupportMismatch.  Nonnegative whenever both arguments share a total.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    mask = p > 0.0
    if np.any(q[mask] <= 0.0):
        raise SupportMismatch("first argument puts mass where second has none")
    pm, qm = p[mask], q[mask]
    # log1p((p-q)/q) == log(p/q) but keeps full precision when p ~ q, so the
    # divergence of nearly identical vectors resolves far below 1e-16.  Both
    # where-branches evaluate eagerly; a denormal p against a normal q sends
    # the unused log1p branch to -inf, hence the silenced divide warning.
    ratio = pm / qm
    with np.errstate(divide="ignore"):
        logs = np.where(
            (ratio > 0.5) & (ratio < 2.0), np.log1p((pm - qm) / qm), np.log(ratio)
        )
    return float((pm * logs).sum())


def bregman_identity_residual(bids_next, bids_prev, log_values) -> float:
    """Gap in the exact expansion of phi around the previous bid matrix.

    phi(b') - phi(b) decomposes as the linearization at b plus the price-space
    divergence KL(p', p); this returns |phi(b') - linearization - KL| which is
    zero up to roundoff for any pair of feasible bid matrices.
    """
    bids_next = np.asarray(bids_next, dtype=float)
    bids_prev = np.asarray(bids_prev, dtype=float)
    grad = shmyrev_gradient(bids_prev, log_values)
    p_next = bids_next.sum(axis=0)
    p_prev = bids_prev.sum(axis=0)
    linear = shmyrev_objective(bids_prev, log_values, prices=p_prev) + float(
        (grad * (bids_next - bids_prev)).sum()
    )
    lhs = shmyrev_objective(bids_next, log_values, prices=p_next)
    return abs(lhs - linear - kl_divergence(p_next, p_prev))


def relative_smoothness_gap(bids_next, bids_prev) -> float:
    """KL between bid matrices minus KL between their price vectors.

    Nonnegative: aggregating spend into prices only loses divergence.
    """
    bids_next = np.asarray(bids_next, dtype=float)
    bids_prev = np.asarray(bids_prev, dtype=float)
    if bids_next.shape != bids_prev.shape:
        raise DimensionMismatch(
            f"shapes {bids_next.shape} and {bids_prev.shape} differ"
        )
    kl_bids = kl_divergence(bids_next, bids_prev)
    kl_prices = kl_divergence(bids_next.sum(axis=0), bids_prev.sum(axis=0))
    return kl_bids - kl_prices
