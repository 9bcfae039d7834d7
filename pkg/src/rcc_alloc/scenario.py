"""Scenario definition: unit helpers, configuration, seeded channel generation.

A scenario is a downlink OFDM base station serving K single-antenna users on
N shared subcarriers while a pulsed OFDM radar illuminates a target area on
the same band. Four sets of power gains describe the coupling:

    h2[n, k]  BS -> user k            (desired comm link)
    s2[n, k]  radar -> user k         (radar interference into comm)
    g2[n]     radar -> target -> radar (radar round trip)
    u2[n]     BS -> radar receiver     (comm interference into radar)

All gains are linear power ratios; all powers inside the solver are watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
import warnings

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "PathlossModel",
    "RadarGeometry",
    "TargetArea",
    "ChannelSet",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "generate_channels",
]


class ConfigError(ValueError):
    """Raised for malformed scenario configuration input."""


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------

def dbm_to_watts(value_dbm):
    """Power in dBm -> watts."""
    return 10.0 ** ((np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(value_w):
    """Power in watts -> dBm. Requires strictly positive input."""
    value_w = np.asarray(value_w, dtype=float)
    if np.any(value_w <= 0.0):
        raise ValueError("watts_to_dbm requires strictly positive power")
    return 10.0 * np.log10(value_w) + 30.0


def db_to_linear(value_db):
    """Ratio in dB -> linear ratio."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """Linear ratio -> dB. Requires strictly positive input."""
    value = np.asarray(value, dtype=float)
    if np.any(value <= 0.0):
        raise ValueError("linear_to_db requires a strictly positive ratio")
    return 10.0 * np.log10(value)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathlossModel:
    reference_loss_db: float = 41.0  # loss at reference distance
    exponent: float = 3.5            # log-distance decay exponent
    reference_dist_m: float = 1.0

    def __post_init__(self):
        if self.reference_dist_m <= 0.0:
            raise ConfigError("pathloss.reference_dist_m must be positive")
        if self.exponent <= 0.0:
            raise ConfigError("pathloss.exponent must be positive")

    def loss_db(self, dist_m):
        """Log-distance pathloss in dB at distance dist_m (meters)."""
        dist_m = np.asarray(dist_m, dtype=float)
        if np.any(dist_m <= 0.0):
            raise ValueError("pathloss distance must be positive")
        ratio = np.maximum(dist_m / self.reference_dist_m, 1.0)
        return self.reference_loss_db + 10.0 * self.exponent * np.log10(ratio)

    def gain(self, dist_m):
        """Linear power gain (<= 1) at distance dist_m."""
        return db_to_linear(-self.loss_db(dist_m))


@dataclass(frozen=True)
class TargetArea:
    range_m: float = 300.0  # nominal radar-to-target range; round trip = 2x

    def __post_init__(self):
        if self.range_m <= 0.0:
            raise ConfigError("radar_target_area.range_m must be positive")


@dataclass(frozen=True)
class RadarGeometry:
    bs_radar_dist_m: float = 180.0  # BS to radar receiver distance
    radar_target_area: TargetArea = field(default_factory=TargetArea)
    processing_gain_db: float = 36.5  # coherent integration gain on the round trip

    def __post_init__(self):
        if self.bs_radar_dist_m <= 0.0:
            raise ConfigError("geometry.bs_radar_dist_m must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    n_subcarriers: int = 128
    n_users: int = 5
    carrier_freq_hz: float = 2.4e9
    cell_radius_m: float = 800.0
    noise_comm_dbm: float = -105.0   # per-subcarrier comm noise power
    noise_radar_dbm: float = -105.0  # per-subcarrier radar noise power
    p_c_max_dbm: float = 50.0        # total comm power budget
    p_r_max_dbm: float = 45.0        # total radar power budget
    p_c_cap_dbm: float = 30.0        # per-subcarrier comm power cap
    p_r_cap_dbm: float = 30.0        # per-subcarrier radar power cap
    sinr_floor_db: float = 12.0      # radar detection SINR requirement
    eta: float = 0.5                 # intra-subcarrier interference penalty weight
    shadowing_sigma_db: float = 8.0  # log-normal shadowing std dev on user links
    fading_enabled: bool = True      # per-subcarrier Rayleigh power fades
    penalty_own_gain: bool = True    # interference weighted by receiver's own gain
    allow_low_eta: bool = False      # permit eta < 0.5 (breaks equivalence guarantee)
    seed: int = 1
    pathloss: PathlossModel = field(default_factory=PathlossModel)
    geometry: RadarGeometry = field(default_factory=RadarGeometry)

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ConfigError("n_subcarriers must be >= 1")
        if self.n_users < 1:
            raise ConfigError("n_users must be >= 1")
        if self.cell_radius_m <= self.pathloss.reference_dist_m:
            raise ConfigError("cell_radius_m must exceed pathloss.reference_dist_m")
        if self.shadowing_sigma_db < 0.0:
            raise ConfigError("shadowing_sigma_db must be >= 0")
        if self.eta <= 0.0:
            raise ConfigError("eta must be positive")
        if self.eta < 0.5 and not self.allow_low_eta:
            raise ConfigError(
                "eta < 0.5 voids the binary-equivalence guarantee; "
                "set allow_low_eta=true to override"
            )
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if self.p_c_cap_dbm > self.p_c_max_dbm:
            warnings.warn("p_c_cap_dbm exceeds p_c_max_dbm; cap still enforced")
        if self.p_r_cap_dbm > self.p_r_max_dbm:
            warnings.warn("p_r_cap_dbm exceeds p_r_max_dbm; cap still enforced")

    # linear-unit views used by the solver

    @property
    def noise_comm_w(self) -> float:
        return float(dbm_to_watts(self.noise_comm_dbm))

    @property
    def noise_radar_w(self) -> float:
        return float(dbm_to_watts(self.noise_radar_dbm))

    @property
    def p_c_max_w(self) -> float:
        return float(dbm_to_watts(self.p_c_max_dbm))

    @property
    def p_r_max_w(self) -> float:
        return float(dbm_to_watts(self.p_r_max_dbm))

    @property
    def p_c_cap_w(self) -> float:
        return float(dbm_to_watts(self.p_c_cap_dbm))

    @property
    def p_r_cap_w(self) -> float:
        return float(dbm_to_watts(self.p_r_cap_dbm))

    @property
    def sinr_floor_linear(self) -> float:
        return float(db_to_linear(self.sinr_floor_db))

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        return _build_dataclass(cls, raw, "")

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        text = Path(path).read_text()
        raw = yaml.safe_load(text)
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        return cls.from_dict(raw)


_NESTED = {PathlossModel, RadarGeometry, TargetArea, ScenarioConfig}


def _build_dataclass(cls, raw, prefix):
    if not isinstance(raw, dict):
        raise ConfigError(f"'{prefix or cls.__name__}' must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        where = f" in '{prefix}'" if prefix else ""
        raise ConfigError(f"unknown config key(s){where}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in raw.items():
        f = known[name]
        sub = _nested_type(f)
        key = f"{prefix}.{name}" if prefix else name
        if sub is not None:
            kwargs[name] = _build_dataclass(sub, value, key)
        else:
            kwargs[name] = _coerce_scalar(f, value, key)
    try:
        return cls(**kwargs)
    except TypeError as exc:  # pragma: no cover - defensive
        raise ConfigError(str(exc)) from exc


def _nested_type(f):
    for cand in _NESTED:
        if f.type == cand.__name__ or f.type is cand:
            return cand
    return None


def _coerce_scalar(f, value, key):
    if f.type == "bool" or f.type is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config key '{key}' must be a boolean")
        return value
    if f.type == "int" or f.type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key '{key}' must be an integer")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{key}' must be a number")
    return float(value)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelSet:
    """Linear power gains for one scenario draw.

    h2, s2 are (N, K); g2, u2 are (N,). user_dist_m / radar_user_dist_m are
    kept for diagnostics and tests (they do not enter the solver).
    """

    h2: np.ndarray
    s2: np.ndarray
    g2: np.ndarray
    u2: np.ndarray
    user_dist_m: np.ndarray
    radar_user_dist_m: np.ndarray

    def __post_init__(self):
        n, k = self.h2.shape
        if self.s2.shape != (n, k) or self.g2.shape != (n,) or self.u2.shape != (n,):
            raise ValueError("inconsistent channel array shapes")
        for name in ("h2", "s2", "g2", "u2"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
                raise ValueError(f"{name} must be finite and non-negative")

    @property
    def n_subcarriers(self) -> int:
        return self.h2.shape[0]

    @property
    def n_users(self) -> int:
        return self.h2.shape[1]

    def without_radar_interference(self) -> "ChannelSet":
        """Copy with the radar-to-user coupling removed (baseline studies)."""
        return replace(self, s2=np.zeros_like(self.s2))


def generate_channels(config: ScenarioConfig, rng=None) -> ChannelSet:
    """Draw one seeded scenario realization.

    Draw order is fixed (user polar coords, BS-link shadowing, BS-link fades,
    radar-link shadowing, radar-link fades, round-trip fades) so a given
    (config, seed) pair always yields the same channels.

    User positions are uniform over the annulus between the pathloss reference
    distance and the cell radius, BS at the origin, radar receiver on the
    positive x axis. User links get log-normal shadowing and (optionally)
    unit-mean exponential power fades per subcarrier. The radar round trip is
    modeled as pathloss at twice the nominal target range plus a processing
    gain, faded per subcarrier; the BS-to-radar coupling is flat pathloss.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n, k = config.n_subcarriers, config.n_users
    pl = config.pathloss
    geo = config.geometry

    # area-uniform radii over [ref_dist, cell_radius]
    lo2 = pl.reference_dist_m ** 2
    hi2 = config.cell_radius_m ** 2
    radii = np.sqrt(lo2 + rng.random(k) * (hi2 - lo2))
    angles = rng.random(k) * (2.0 * math.pi)
    ux = radii * np.cos(angles)
    uy = radii * np.sin(angles)

    shadow_h = _shadow(rng, config.shadowing_sigma_db, k)
    fade_h = _fades(rng, config.fading_enabled, (n, k))

    radar_xy = np.array([geo.bs_radar_dist_m, 0.0])
    radar_dist = np.hypot(ux - radar_xy[0], uy - radar_xy[1])
    radar_dist = np.maximum(radar_dist, pl.reference_dist_m)
    shadow_s = _shadow(rng, config.shadowing_sigma_db, k)
    fade_s = _fades(rng, config.fading_enabled, (n, k))

    fade_g = _fades(rng, config.fading_enabled, (n,))

    h2 = pl.gain(radii)[None, :] * shadow_h[None, :] * fade_h
    s2 = pl.gain(radar_dist)[None, :] * shadow_s[None, :] * fade_s
    round_trip = pl.gain(2.0 * geo.radar_target_area.range_m)
    g2 = round_trip * db_to_linear(geo.processing_gain_db) * fade_g
    u2 = np.full(n, pl.gain(geo.bs_radar_dist_m))

    return ChannelSet(
        h2=h2, s2=s2, g2=g2, u2=u2,
        user_dist_m=radii, radar_user_dist_m=radar_dist,
    )


def _shadow(rng, sigma_db, size):
    if sigma_db == 0.0:
        return np.ones(size)
    return db_to_linear(rng.normal(0.0, sigma_db, size))


def _fades(rng, enabled, shape):
    if not enabled:
        return np.ones(shape)
    return rng.exponential(1.0, shape)
