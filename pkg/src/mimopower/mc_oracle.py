"""Sampling-based estimator of the general ergodic SINR bound under MRT.

This is the validation oracle for the closed form in :mod:`mimopower.se`:
it draws channel estimates and estimation errors with their exact
statistics, forms MRT precoders normalized by the average estimate norm,
and assembles the general SINR bound from sample moments

    |E{h^H w}|^2,   E{|h^H w|^2} - |E{h^H w}|^2,   E{|h^H w_other|^2}

without using any closed-form simplification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelStats, NetworkScenario
from .se import PowerAllocation


@dataclass(frozen=True)
class McConfig:
    """Sampling configuration.

    ``batch_size`` is part of the deterministic stream layout: draws are
    generated in fixed-size batches, each from its own generator seeded by
    (rng_seed, batch index), so batches can be evaluated in any order (or in
    parallel) without changing the merged estimate.
    """

    num_samples: int = 100_000
    rng_seed: int = 0
    batch_size: int = 4096

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _complex_normal(rng, variance, shape):
    """CN(0, variance) with independent real/imag parts of half variance each."""
    g = rng.standard_normal((2,) + shape)
    return np.sqrt(np.asarray(variance) / 2.0) * (g[0] + 1j * g[1])


def sample_channel_pair(stats: ChannelStats, scenario: NetworkScenario, rng, size=None):
    """Draw (true channels, estimated channels) for every BS-user pair.

    The estimate hhat ~ CN(0, gamma I_M) and the independent error
    e ~ CN(0, (beta - gamma) I_M) are drawn first; the true channel is
    h = hhat - e. Returns arrays of shape (L, K, M), or (size, L, K, M).
    """
    L, K = stats.beta.shape
    M = scenario.num_antennas
    shape = (L, K, M) if size is None else (int(size), L, K, M)
    var_axes = (..., None) if size is None else (None, ..., None)
    gamma = stats.gamma[var_axes]
    err_var = stats.error_variance[var_axes]
    hhat = _complex_normal(rng, gamma, shape)
    err = _complex_normal(rng, err_var, shape)
    return hhat - err, hhat


def mrt_precoder(hhat, gamma, num_antennas):
    """MRT direction normalized by the average estimate norm sqrt(M * gamma).

    The normalization is statistical, so a single realization does not have
    unit norm; an all-zero estimate simply maps to an all-zero precoder.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0.0):
        raise ValueError("gamma must be strictly positive")
    return np.asarray(hhat) / np.sqrt(num_antennas * gamma)


@dataclass
class SinrEstimate:
    """Monte-Carlo estimate of one user's SINR with per-term statistics.

    ``desired`` holds |E{h^H w}|^2 per serving BS (closed form: M * gamma),
    ``gain_uncertainty`` the own-beam variance term (closed form: beta), and
    ``second_moment`` E{|h^H w_t|^2} for every (BS, user) beam; its column
    for the target user is the own-beam second moment, the others are the
    cross-interference terms (closed form: beta).
    """

    sinr: float
    sinr_stderr: float
    desired: np.ndarray
    desired_stderr: np.ndarray
    gain_uncertainty: np.ndarray
    gain_uncertainty_stderr: np.ndarray
    second_moment: np.ndarray
    second_moment_stderr: np.ndarray
    num_samples: int


def estimate_sinr_terms(
    stats: ChannelStats,
    alloc: PowerAllocation,
    scenario: NetworkScenario,
    user: int,
    cfg: McConfig,
) -> SinrEstimate:
    """Estimate the general SINR bound for one user by Monte-Carlo sampling.

    Per draw, fresh estimates for every beam and the target user's true
    channels are generated; the inner products h_{i,user}^H w_{i,t} feed the
    sample moments. Standard errors of the moment estimates come from the
    per-draw sample variances; the SINR standard error propagates them
    through the ratio assuming independent terms (adequate for test bands).
    """
    L, K = stats.beta.shape
    M = scenario.num_antennas
    if alloc.rho.shape != (L, K):
        raise ValueError("allocation shape mismatch")
    gamma_u = stats.gamma[:, user]
    err_var_u = stats.error_variance[:, user]

    sum_q = np.zeros(L, dtype=complex)  # own-beam inner products
    sum_q2 = np.zeros(L, dtype=complex)  # their complex squares
    sum_m2 = np.zeros((L, K))  # |h^H w_t|^2
    sum_m4 = np.zeros((L, K))  # |h^H w_t|^4
    n_total = cfg.num_samples
    n_batches = (n_total + cfg.batch_size - 1) // cfg.batch_size
    # MRT normalization: w = hhat / sqrt(M gamma), so with unit-variance raw
    # draws z (hhat = sqrt(gamma/2) z) the inner products reduce to
    # q = h^H z / sqrt(2 M); only the target user's channel needs its
    # variances applied, which keeps the per-batch work at one RNG fill and
    # one contraction. Draws are float32, moments accumulate in float64.
    for b in range(n_batches):
        nb = min(cfg.batch_size, n_total - b * cfg.batch_size)
        rng = np.random.default_rng([cfg.rng_seed, b])
        z_hat = np.empty((L, K, M, nb), dtype=np.complex64)
        rng.standard_normal(out=z_hat.view(np.float32), dtype=np.float32)
        z_err = np.empty((L, M, nb), dtype=np.complex64)
        rng.standard_normal(out=z_err.view(np.float32), dtype=np.float32)
        h_user = (
            np.sqrt(gamma_u / 2.0).astype(np.float32)[:, None, None] * z_hat[:, user]
            - np.sqrt(err_var_u / 2.0).astype(np.float32)[:, None, None] * z_err
        )
        # q[l, t, s] = h_{l,user}(s)^H w_{l,t}(s)
        q = np.einsum("lms,ltms->lts", h_user.conj(), z_hat, optimize=True)
        q = q.astype(np.complex128)
        q /= np.sqrt(2.0 * M)
        q_abs2 = q.real**2 + q.imag**2
        qk = q[:, user, :]
        sum_q += qk.sum(axis=1)
        sum_q2 += (qk * qk).sum(axis=1)
        sum_m2 += q_abs2.sum(axis=2)
        sum_m4 += (q_abs2 * q_abs2).sum(axis=2)

    n = float(n_total)
    a_mean = sum_q / n
    desired = np.abs(a_mean) ** 2
    second_moment = sum_m2 / n
    gain_uncertainty = second_moment[:, user] - desired  # >= 0 by construction

    # Fluctuation of the sample mean along the mean direction drives |a_mean|^2.
    ea2 = sum_q2 / n
    abs_mean = np.abs(a_mean)
    phase = a_mean / np.where(abs_mean > 0.0, abs_mean, 1.0)
    var_along = np.maximum(
        0.5 * gain_uncertainty + 0.5 * np.real(np.conj(phase) ** 2 * (ea2 - a_mean**2)),
        0.0,
    )
    desired_stderr = 2.0 * np.abs(a_mean) * np.sqrt(var_along / n)
    m2_var = np.maximum(sum_m4 / n - second_moment**2, 0.0)
    second_moment_stderr = np.sqrt(m2_var / n)
    gain_uncertainty_stderr = np.hypot(second_moment_stderr[:, user], desired_stderr)

    rho_u = alloc.rho[:, user]
    numer = float(rho_u @ desired)
    cross_mask = np.ones((L, K), dtype=bool)
    cross_mask[:, user] = False
    denom = (
        float(rho_u @ gain_uncertainty)
        + float(np.sum(alloc.rho * second_moment * cross_mask))
        + scenario.noise_dl
    )
    sinr = numer / denom
    var_num = float(np.sum((rho_u * desired_stderr) ** 2))
    var_den = float(np.sum((rho_u * gain_uncertainty_stderr) ** 2)) + float(
        np.sum((alloc.rho * second_moment_stderr * cross_mask) ** 2)
    )
    if numer > 0.0:
        stderr = sinr * np.sqrt(var_num / numer**2 + var_den / denom**2)
    else:
        stderr = 0.0
    return SinrEstimate(
        sinr=sinr,
        sinr_stderr=float(stderr),
        desired=desired,
        desired_stderr=desired_stderr,
        gain_uncertainty=gain_uncertainty,
        gain_uncertainty_stderr=gain_uncertainty_stderr,
        second_moment=second_moment,
        second_moment_stderr=second_moment_stderr,
        num_samples=n_total,
    )
