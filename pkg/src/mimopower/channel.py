"""Scenario geometry and large-scale channel statistics.

Distances are in km, powers in linear watts. The large-scale gain beta
combines a log-distance path loss with log-normal shadowing in dB; the
estimation quality gamma is the per-antenna variance of the MMSE channel
estimate obtained from orthogonal uplink pilots,

    gamma = p * tau_p * beta**2 / (p * tau_p * beta + noise_ul),

so that beta - gamma is the estimation-error variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

# Log-distance path loss in dB at d km: gain = -(148.1 + 37.6 log10 d).
_PL_INTERCEPT_DB = 148.1
_PL_SLOPE_DB = 37.6


def dbm_to_watt(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) * 1e-3


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float) / 1e-3)


def path_loss_db(distance_km):
    """Average channel gain in dB (negative) at the given distance in km."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be strictly positive (km)")
    return -_PL_INTERCEPT_DB - _PL_SLOPE_DB * np.log10(d)


def beta_from_distance(distance_km, shadow_db=0.0):
    """Linear large-scale gain at a distance, with an explicit shadowing draw in dB."""
    return 10.0 ** ((path_loss_db(distance_km) + shadow_db) / 10.0)


@dataclass(frozen=True)
class NetworkScenario:
    """One network drop: geometry plus pilot/power/noise parameters.

    Positions are (x, y) in km; ``pilot_power`` is a per-user vector in W and
    ``pmax`` a per-BS vector in W. Pilots are orthogonal, which requires
    ``pilot_length >= num_users`` and ``pilot_length < coherence_length``.
    """

    num_bs: int
    num_users: int
    num_antennas: int
    bs_positions: np.ndarray
    user_positions: np.ndarray
    coherence_length: int
    pilot_length: int
    pilot_power: np.ndarray
    noise_ul: float
    noise_dl: float
    pmax: np.ndarray
    shadow_std_db: float
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bs_positions", np.asarray(self.bs_positions, dtype=float))
        object.__setattr__(self, "user_positions", np.asarray(self.user_positions, dtype=float))
        object.__setattr__(self, "pilot_power", np.asarray(self.pilot_power, dtype=float))
        object.__setattr__(self, "pmax", np.asarray(self.pmax, dtype=float))
        if min(self.num_bs, self.num_users, self.num_antennas) < 1:
            raise ValueError("num_bs, num_users and num_antennas must all be >= 1")
        if self.bs_positions.shape != (self.num_bs, 2):
            raise ValueError("bs_positions must have shape (num_bs, 2)")
        if self.user_positions.shape != (self.num_users, 2):
            raise ValueError("user_positions must have shape (num_users, 2)")
        if self.pilot_length < self.num_users:
            raise ValueError("orthogonal pilots need pilot_length >= num_users")
        if self.pilot_length >= self.coherence_length:
            raise ValueError("pilot_length must be smaller than coherence_length")
        if self.pilot_power.shape != (self.num_users,):
            raise ValueError("pilot_power must be a per-user vector")
        if self.pmax.shape != (self.num_bs,):
            raise ValueError("pmax must be a per-BS vector")
        if np.any(self.pilot_power <= 0.0) or np.any(self.pmax <= 0.0):
            raise ValueError("pilot_power and pmax must be strictly positive")
        if self.noise_ul <= 0.0 or self.noise_dl <= 0.0:
            raise ValueError("noise variances must be strictly positive")
        if self.shadow_std_db < 0.0:
            raise ValueError("shadow_std_db must be nonnegative")

    def with_antennas(self, num_antennas: int) -> "NetworkScenario":
        return replace(self, num_antennas=num_antennas)

    def with_users(self, user_positions: np.ndarray) -> "NetworkScenario":
        return replace(self, user_positions=user_positions)


@dataclass(frozen=True)
class ChannelStats:
    """Large-scale gains ``beta`` and MMSE estimate variances ``gamma``, both (L, K)."""

    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        if self.beta.shape != self.gamma.shape or self.beta.ndim != 2:
            raise ValueError("beta and gamma must be equal-shape (L, K) matrices")
        if np.any(self.beta <= 0.0):
            raise ValueError("beta must be strictly positive")
        # gamma == beta is the perfect-estimation limit and is allowed.
        if np.any(self.gamma <= 0.0) or np.any(self.gamma > self.beta):
            raise ValueError("gamma must satisfy 0 < gamma <= beta elementwise")

    @property
    def error_variance(self) -> np.ndarray:
        """Estimation-error variance, exactly beta - gamma."""
        return self.beta - self.gamma

    @property
    def num_bs(self) -> int:
        return self.beta.shape[0]

    @property
    def num_users(self) -> int:
        return self.beta.shape[1]


def pairwise_distances_km(bs_positions, user_positions) -> np.ndarray:
    bs = np.asarray(bs_positions, dtype=float)
    users = np.asarray(user_positions, dtype=float)
    return np.linalg.norm(bs[:, None, :] - users[None, :, :], axis=2)


def large_scale_fading(scenario: NetworkScenario, rng=None) -> np.ndarray:
    """Draw the (L, K) matrix of linear gains beta for one shadowing realization.

    Deterministic given the generator state; with ``rng=None`` a fresh
    generator seeded from ``scenario.rng_seed`` is used.
    """
    if rng is None:
        rng = np.random.default_rng(scenario.rng_seed)
    d = pairwise_distances_km(scenario.bs_positions, scenario.user_positions)
    if np.any(d <= 0.0):
        raise ValueError("a user is colocated with a BS (zero distance)")
    shadow = rng.normal(0.0, scenario.shadow_std_db, size=d.shape)
    return beta_from_distance(d, shadow)


def mmse_estimate_variance(beta, pilot_power, pilot_length, noise_ul):
    """MMSE estimate variance p*tau*beta^2 / (p*tau*beta + noise), elementwise.

    ``beta`` is (L, K) and ``pilot_power`` a per-user vector (or scalar);
    zero pilot power yields zero estimation quality.
    """
    beta = np.asarray(beta, dtype=float)
    energy = np.asarray(pilot_power, dtype=float) * float(pilot_length)
    return energy * beta**2 / (energy * beta + float(noise_ul))


def estimation_quality(scenario: NetworkScenario, beta) -> np.ndarray:
    """The (L, K) matrix gamma of estimate variances for a given beta."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0.0):
        raise ValueError("beta must be strictly positive")
    return mmse_estimate_variance(beta, scenario.pilot_power, scenario.pilot_length, scenario.noise_ul)


def channel_stats(scenario: NetworkScenario, rng=None) -> ChannelStats:
    beta = large_scale_fading(scenario, rng)
    return ChannelStats(beta=beta, gamma=estimation_quality(scenario, beta))


def sample_user_positions(num_users, bs_positions, rng, min_dist_km=0.01) -> np.ndarray:
    """Uniform user drop over the bounding rectangle of the BS positions.

    Positions closer than ``min_dist_km`` to any BS are rejected and redrawn,
    which keeps the path loss bounded.
    """
    bs = np.asarray(bs_positions, dtype=float)
    lo = bs.min(axis=0)
    hi = bs.max(axis=0)
    if np.any(hi <= lo):
        raise ValueError("BS positions must span a nondegenerate rectangle")
    out = np.empty((num_users, 2))
    remaining = np.arange(num_users)
    while remaining.size:
        cand = rng.uniform(lo, hi, size=(remaining.size, 2))
        d = np.linalg.norm(bs[:, None, :] - cand[None, :, :], axis=2)
        ok = d.min(axis=0) >= min_dist_km
        out[remaining[ok]] = cand[ok]
        remaining = remaining[~ok]
    return out


# --- scenario (de)serialization ------------------------------------------

def _parse_power(entry, length, name):
    """Accept a raw W number/list or {'units': 'W'|'dBm', 'value(s)': ...}."""
    units = "W"
    if isinstance(entry, dict):
        units = entry.get("units", "W")
        if "values" in entry:
            entry = entry["values"]
        elif "value" in entry:
            entry = entry["value"]
        else:
            raise ValueError(f"{name}: expected 'value' or 'values' next to 'units'")
    arr = np.asarray(entry, dtype=float)
    if units == "dBm":
        arr = dbm_to_watt(arr)
    elif units != "W":
        raise ValueError(f"{name}: unknown power units {units!r}")
    if arr.ndim == 0:
        arr = np.full(length, float(arr))
    if arr.shape != (length,):
        raise ValueError(f"{name}: expected scalar or length-{length} vector")
    return arr


def scenario_from_json_dict(d: dict) -> NetworkScenario:
    try:
        num_bs = int(d["num_bs"])
        num_users = int(d["num_users"])
        noise_ul = _parse_power(d["noise_ul"], 1, "noise_ul")[0]
        noise_dl = _parse_power(d["noise_dl"], 1, "noise_dl")[0]
        return NetworkScenario(
            num_bs=num_bs,
            num_users=num_users,
            num_antennas=int(d["num_antennas"]),
            bs_positions=np.asarray(d["bs_positions"], dtype=float),
            user_positions=np.asarray(d["user_positions"], dtype=float),
            coherence_length=int(d["coherence_length"]),
            pilot_length=int(d["pilot_length"]),
            pilot_power=_parse_power(d["pilot_power"], num_users, "pilot_power"),
            noise_ul=float(noise_ul),
            noise_dl=float(noise_dl),
            pmax=_parse_power(d["pmax"], num_bs, "pmax"),
            shadow_std_db=float(d["shadow_std_db"]),
            rng_seed=int(d.get("rng_seed", 0)),
        )
    except KeyError as e:
        raise ValueError(f"scenario JSON is missing field {e.args[0]!r}") from e


def scenario_to_json_dict(scenario: NetworkScenario) -> dict:
    return {
        "num_bs": scenario.num_bs,
        "num_users": scenario.num_users,
        "num_antennas": scenario.num_antennas,
        "bs_positions": scenario.bs_positions.tolist(),
        "user_positions": scenario.user_positions.tolist(),
        "coherence_length": scenario.coherence_length,
        "pilot_length": scenario.pilot_length,
        "pilot_power": {"units": "W", "values": scenario.pilot_power.tolist()},
        "noise_ul": {"units": "W", "value": scenario.noise_ul},
        "noise_dl": {"units": "W", "value": scenario.noise_dl},
        "pmax": {"units": "W", "values": scenario.pmax.tolist()},
        "shadow_std_db": scenario.shadow_std_db,
        "rng_seed": scenario.rng_seed,
    }


def load_scenario(path) -> NetworkScenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"cannot read scenario file {path}: {e}") from e
    return scenario_from_json_dict(data)


def save_scenario(scenario: NetworkScenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_json_dict(scenario), fh, indent=2)
        fh.write("\n")
