"""Synthetic dual-radio trace generator and selector replay harness.

The generator stands in for a field deployment: short-range radio packets
hop toward the gateway (per-hop capacity shared across hops, retransmission
inflation driven by packet reception ratio), long-range packets go single
hop at a rate tier set by received signal strength under log-distance path
loss with shadowing. Nodes between the gray-region bounds see competitive
throughputs, so the winning radio there flips packet to packet with mostly
small margins, which is the regime that makes per-sample costs matter.

Feature columns are noisy observables of the latent channel state, never
the realized throughputs themselves. All constants are frozen defaults of
ScenarioConfig (config_version 1), tuned once at desk scale and pinned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from .dataset import TraceRecord, FEATURE_NAMES
from .errors import DataError
from .tree import ObliqueTree

CONFIG_VERSION = 1

DEFAULT_DISTANCES_M = (
    150.0, 280.0,
    560.0, 680.0, 760.0, 840.0, 920.0, 1000.0, 1060.0, 1120.0, 1160.0, 1190.0,
    1300.0, 1450.0, 1600.0,
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Frozen generative constants for one deployment scenario."""

    config_version: int = CONFIG_VERSION
    n_nodes: int = 15
    distances_m: tuple = DEFAULT_DISTANCES_M
    packet_interval_s: float = 3.0
    n_packets: int = 120
    payload_bytes: int = 29
    seed: int = 0
    gray_region_m: tuple = (500.0, 1200.0)

    # short-range (multi-hop) side
    hop_range_m: float = 300.0
    zigbee_hop_capacity_bps: float = 11500.0
    # store-and-forward contention: effective divisor hn * (1 + overhead*(hn-1))
    zigbee_hop_overhead: float = 0.2
    prr_intercept: float = 1.05
    prr_slope_per_m: float = 5.5e-4
    prr_noise_std: float = 0.04
    prr_floor: float = 0.10
    prr_ceil: float = 0.99
    rnp_sigma: float = 0.06
    rnp_cap: float = 30.0

    # long-range (single-hop) side
    lora_tx_power_dbm: float = 14.0
    path_loss_ref_db: float = 31.5     # at 1 m, 915 MHz
    path_loss_exponent: float = 2.7
    shadowing_std_db: float = 2.5
    lora_rate_tiers: tuple = ((-85.0, 5470.0), (-90.3, 4600.0), (-93.4, 3550.0),
                              (-96.6, 1730.0), (-101.0, 870.0))
    lora_base_rate_bps: float = 850.0

    # shared noise
    throughput_jitter_sigma: float = 0.055
    rssi_meas_std_db: float = 2.5
    prr_meas_std: float = 0.04
    rnp_meas_sigma: float = 0.05

    # queuing model (interval sweep)
    service_time_s: float = 1.0
    stale_occupancy_floor: float = 0.30
    stale_prob_max: float = 0.95

    def __post_init__(self):
        if self.config_version != CONFIG_VERSION:
            raise DataError(f"unsupported scenario config_version {self.config_version}")
        if len(self.distances_m) != self.n_nodes:
            raise DataError(f"{self.n_nodes} nodes but {len(self.distances_m)} distances")
        if any(d <= 0 for d in self.distances_m):
            raise DataError("distances must be > 0")
        if self.packet_interval_s <= 0:
            raise DataError("packet interval must be > 0")
        if not self.gray_region_m[0] < self.gray_region_m[1]:
            raise DataError("gray region bounds must be increasing")

    def to_json(self) -> str:
        doc = asdict(self)
        doc["distances_m"] = list(self.distances_m)
        doc["gray_region_m"] = list(self.gray_region_m)
        doc["lora_rate_tiers"] = [list(t) for t in self.lora_rate_tiers]
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"scenario file is not valid JSON: {e}") from e
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise DataError(f"unknown scenario fields: {sorted(unknown)}")
        if "distances_m" in doc:
            doc["distances_m"] = tuple(float(d) for d in doc["distances_m"])
        if "gray_region_m" in doc:
            doc["gray_region_m"] = tuple(float(v) for v in doc["gray_region_m"])
        if "lora_rate_tiers" in doc:
            doc["lora_rate_tiers"] = tuple((float(a), float(b)) for a, b in doc["lora_rate_tiers"])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such scenario file: {path}")
        return cls.from_json(path.read_text(encoding="utf-8"))


def _lora_rate(cfg: ScenarioConfig, rssi: np.ndarray) -> np.ndarray:
    rate = np.full(rssi.shape, cfg.lora_base_rate_bps)
    for threshold, tier_rate in sorted(cfg.lora_rate_tiers):
        rate = np.where(rssi >= threshold, tier_rate, rate)
    return rate


def _lognormal(rng, sigma: float, size: int) -> np.ndarray:
    """Multiplicative jitter with unit mean."""
    return np.exp(rng.normal(0.0, sigma, size) - sigma * sigma / 2.0)


def hop_count(cfg: ScenarioConfig, distance_m: float) -> int:
    return max(1, math.ceil(distance_m / cfg.hop_range_m))


def generate(cfg: ScenarioConfig, seed: int | None = None) -> list[TraceRecord]:
    """Deterministic trace: per node, n_packets scheduled every interval."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    records: list[TraceRecord] = []
    m = cfg.n_packets
    for idx, d in enumerate(cfg.distances_m):
        hn = hop_count(cfg, d)
        # latent channel state, one draw set per packet in fixed order
        shadowing = rng.normal(0.0, cfg.shadowing_std_db, m)
        lora_jitter = _lognormal(rng, cfg.throughput_jitter_sigma, m)
        prr_noise = rng.normal(0.0, cfg.prr_noise_std, m)
        rnp_jitter = _lognormal(rng, cfg.rnp_sigma, m)
        zigbee_jitter = _lognormal(rng, cfg.throughput_jitter_sigma, m)
        rssi_meas = rng.normal(0.0, cfg.rssi_meas_std_db, m)
        prr_meas = rng.normal(0.0, cfg.prr_meas_std, m)
        rnp_meas = _lognormal(rng, cfg.rnp_meas_sigma, m)

        path_loss = cfg.path_loss_ref_db + 10.0 * cfg.path_loss_exponent * math.log10(d)
        rssi_true = cfg.lora_tx_power_dbm - path_loss + shadowing
        tp_lora = _lora_rate(cfg, rssi_true) * lora_jitter

        prr_true = np.clip(cfg.prr_intercept - cfg.prr_slope_per_m * d + prr_noise,
                           cfg.prr_floor, cfg.prr_ceil)
        rnp_true = np.clip(rnp_jitter / prr_true, 1.0, cfg.rnp_cap)
        path_divisor = hn * (1.0 + cfg.zigbee_hop_overhead * (hn - 1))
        tp_zigbee = cfg.zigbee_hop_capacity_bps / path_divisor / rnp_true * zigbee_jitter

        rssi_obs = rssi_true + rssi_meas
        prr_obs = np.clip(prr_true + prr_meas, 0.0, 1.0)
        rnp_obs = np.maximum(1.0, rnp_true * rnp_meas)

        node = f"n{idx:02d}"
        for i in range(m):
            records.append(TraceRecord(
                node_id=node, t=i * cfg.packet_interval_s,
                tp_zigbee=float(tp_zigbee[i]), tp_lora=float(tp_lora[i]),
                hn=float(hn), rssi=float(rssi_obs[i]),
                prr=float(prr_obs[i]), rnp=float(rnp_obs[i])))
    return records


# ---------- selectors ----------


class AlwaysSelector:
    def __init__(self, radio: int):
        self.radio = int(radio)
        self.name = "always_zigbee" if self.radio == 0 else "always_lora"

    def choose(self, traces) -> np.ndarray:
        return np.full(len(traces), self.radio, dtype=int)


class OracleSelector:
    """Reads realized throughputs; per-packet best radio (tie -> Zigbee)."""

    name = "oracle"

    def choose(self, traces) -> np.ndarray:
        tpz = np.array([r.tp_zigbee for r in traces])
        tpl = np.array([r.tp_lora for r in traces])
        return (tpl > tpz).astype(int)


class TreeSelector:
    """Routes the feature columns through a trained tree (never sees
    the throughput columns)."""

    def __init__(self, tree: ObliqueTree, name: str = "tree"):
        if tree.dim is not None and tree.dim != len(FEATURE_NAMES):
            raise DataError(f"model expects {tree.dim} features, traces carry "
                            f"{len(FEATURE_NAMES)}")
        self.tree = tree
        self.name = name

    def choose(self, traces) -> np.ndarray:
        X = np.array([[r.hn, r.rssi, r.prr, r.rnp] for r in traces])
        return self.tree.predict_many(X)


class ThresholdSelector:
    """Distance-threshold baseline on its observable proxy: picks the
    long-range radio when hop count >= threshold."""

    def __init__(self, hn_threshold: float = 3.0):
        self.hn_threshold = float(hn_threshold)
        self.name = f"threshold_hn{self.hn_threshold:g}"

    def choose(self, traces) -> np.ndarray:
        hn = np.array([r.hn for r in traces])
        return (hn >= self.hn_threshold).astype(int)


@dataclass
class ReplayResult:
    selector: str
    choices: np.ndarray
    achieved_bps: np.ndarray
    oracle_bps: np.ndarray
    mean_throughput_bps: float
    oracle_mean_bps: float
    performance_ratio: float
    oracle_gap_bps: float
    gain_vs_best_single_pct: float
    gain_vs_worst_single_pct: float
    cdf: list  # (percentile, throughput_bps)


def replay(traces: list[TraceRecord], selector) -> ReplayResult:
    """Run one selector over a trace; throughputs are taken from the chosen
    radio's recorded value, the oracle takes the per-packet max."""
    if not traces:
        raise DataError("no trace records to replay")
    choices = np.asarray(selector.choose(traces), dtype=int)
    tpz = np.array([r.tp_zigbee for r in traces])
    tpl = np.array([r.tp_lora for r in traces])
    achieved = np.where(choices == 0, tpz, tpl)
    oracle = np.maximum(tpz, tpl)
    mean_achieved = float(np.mean(achieved))
    mean_oracle = float(np.mean(oracle))
    best_single = max(float(np.mean(tpz)), float(np.mean(tpl)))
    worst_single = min(float(np.mean(tpz)), float(np.mean(tpl)))
    cdf = [(p, float(np.percentile(achieved, p))) for p in range(1, 101)]
    return ReplayResult(
        selector=selector.name,
        choices=choices,
        achieved_bps=achieved,
        oracle_bps=oracle,
        mean_throughput_bps=mean_achieved,
        oracle_mean_bps=mean_oracle,
        performance_ratio=mean_achieved / mean_oracle,
        oracle_gap_bps=mean_oracle - mean_achieved,
        gain_vs_best_single_pct=100.0 * (mean_achieved - best_single) / best_single,
        gain_vs_worst_single_pct=100.0 * (mean_achieved - worst_single) / worst_single,
        cdf=cdf,
    )


# ---------- interval sweep with queuing-driven feature staleness ----------


def occupancy(cfg: ScenarioConfig, interval_s: float) -> float:
    return min(cfg.service_time_s / interval_s, 0.999)


def mean_wait_s(cfg: ScenarioConfig, interval_s: float) -> float:
    """M/D/1-style mean queuing wait for the given generation interval."""
    rho = occupancy(cfg, interval_s)
    return rho * cfg.service_time_s / (2.0 * (1.0 - rho))


def staleness_probability(cfg: ScenarioConfig, interval_s: float) -> float:
    rho = occupancy(cfg, interval_s)
    if rho <= cfg.stale_occupancy_floor:
        return 0.0
    frac = (rho - cfg.stale_occupancy_floor) / (1.0 - cfg.stale_occupancy_floor)
    return min(cfg.stale_prob_max, frac)


def _stale_traces(traces, cfg: ScenarioConfig, interval_s: float, seed: int):
    """Replace PRR/RNP observations with lagged ones for queued packets.

    Path-quality beacons sit in the same queue as data, so under load the
    estimator reports an older channel state. Throughputs (ground truth)
    are never touched.
    """
    p_stale = staleness_probability(cfg, interval_s)
    if p_stale == 0.0:
        return traces
    lag = 1 + int(mean_wait_s(cfg, interval_s) / interval_s)
    rng = np.random.default_rng(np.random.SeedSequence([seed, int(interval_s * 1000), 0xA5]))
    by_node: dict[str, list[int]] = {}
    for i, r in enumerate(traces):
        by_node.setdefault(r.node_id, []).append(i)
    out = list(traces)
    for node, idxs in sorted(by_node.items()):
        stale = rng.random(len(idxs)) < p_stale
        for pos, i in enumerate(idxs):
            if stale[pos]:
                src = traces[idxs[max(0, pos - lag)]]
                out[i] = replace(traces[i], prr=src.prr, rnp=src.rnp)
    return out


@dataclass
class SweepRow:
    interval_s: float
    selector: str
    performance_ratio: float
    mean_latency_ms: float


def interval_sweep(cfg: ScenarioConfig, intervals, selector,
                   seed: int | None = None) -> list[SweepRow]:
    """Replay the selector at each packet-generation interval.

    Shorter intervals raise queue occupancy, which adds queuing wait to the
    latency and staleness-corrupts the PRR/RNP features consumed by feature
    selectors; the oracle reads true throughputs and is immune.
    """
    if any(i <= 0 for i in intervals):
        raise DataError("intervals must be positive")
    seed = cfg.seed if seed is None else seed
    rows = []
    for interval in intervals:
        cfg_i = replace(cfg, packet_interval_s=float(interval))
        traces = _stale_traces(generate(cfg_i, seed), cfg_i, float(interval), seed)
        result = replay(traces, selector)
        latency_ms = 1000.0 * (cfg.service_time_s + mean_wait_s(cfg, float(interval)))
        rows.append(SweepRow(float(interval), selector.name,
                             result.performance_ratio, latency_ms))
    return rows
