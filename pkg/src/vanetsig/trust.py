"""Trust-based detection of malicious vehicle reports.

The control infrastructure keeps a trust level per reported vehicle id and
only uses reports whose sender currently has positive trust.  Trust moves
each tick by the sum of four rule families:

* vehicle order - two vehicles of one lane must not swap order,
* reaction to signals - no entering on red / standing at green,
* expected velocity - reported speed against a headway-based estimate,
* neighbour detection - claimed positions must be confirmed by the
  neighbour sets of trusted nearby vehicles.

Rules are vectorized over the rows of a :class:`~vanetsig.vanet.ReportBatch`;
every rule returns a trust change per row of the current batch.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np
from scipy.spatial import cKDTree

from .topology import Topology, default_topology
from .vanet import ReportBatch


class Rule(enum.IntFlag):
    NONE = 0
    ORDER = 1
    SIGNALS = 2
    VELOCITY = 4
    NEIGHBOUR = 8
    ALL = 15


@dataclass(frozen=True)
class DetectionParams:
    alpha: float = 1.0
    beta: float = 0.2
    eps_x: float = 7.5
    eps_v: float = 1.5
    delta: int = 2
    r: float = 50.0
    v_f: float = 15.0
    h_min: float = 7.5
    tau: float = 2.0
    rule_set: Rule = Rule.ALL
    t0: float = 1.0
    t_min: float = -10.0
    t_max: float = 10.0
    filtering: bool = True

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.delta < 1:
            raise ValueError("delta must be at least one tick")
        for name in ("eps_x", "eps_v", "r", "v_f", "h_min", "tau"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.t_min <= self.t0 <= self.t_max:
            raise ValueError("initial trust outside the clamp range")

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass
class Window:
    """Reports of the current batch's senders over ticks ``t - delta .. t``.

    ``x`` and ``lane`` have shape ``(n, delta + 1)`` with the oldest tick in
    column 0; ``complete`` marks senders that reported at every tick.
    """

    ids: np.ndarray
    x: np.ndarray
    lane: np.ndarray
    complete: np.ndarray


def build_window(history: dict[int, ReportBatch], batch: ReportBatch, delta: int) -> Window:
    n = len(batch)
    x = np.full((n, delta + 1), np.nan)
    lane = np.full((n, delta + 1), -1, dtype=np.int64)
    complete = np.ones(n, dtype=bool)
    x[:, -1] = batch.x
    lane[:, -1] = batch.lane
    for d in range(1, delta + 1):
        past = history.get(batch.t - d)
        col = delta - d
        if past is None or len(past) == 0:
            complete[:] = False
            continue
        order = np.argsort(past.ids, kind="stable")
        sorted_ids = past.ids[order]
        pos = np.searchsorted(sorted_ids, batch.ids)
        pos_c = np.minimum(pos, len(sorted_ids) - 1)
        found = (pos < len(sorted_ids)) & (sorted_ids[pos_c] == batch.ids)
        rows = order[pos_c]
        x[found, col] = past.x[rows[found]]
        lane[found, col] = past.lane[rows[found]]
        complete &= found
    return Window(batch.ids, x, lane, complete)


# --- rule 1: vehicle order ----------------------------------------------------

def order_violations(window: Window, eps_x: float) -> tuple[np.ndarray, np.ndarray]:
    """Row pairs ``(i, j)`` where ``i`` overtook ``j`` within the window.

    ``i`` was more than ``eps_x`` behind ``j`` at ``t - delta`` and is more
    than ``eps_x`` ahead at ``t``, both sharing one lane at every tick of the
    window.  Only senders with a complete window take part.
    """
    rows = np.flatnonzero(window.complete)
    none = np.zeros(0, dtype=np.int64)
    if len(rows) < 2:
        return none, none
    lanes = window.lane[rows] + 1
    base = int(lanes.max()) + 1
    group = (lanes * base ** np.arange(lanes.shape[1])).sum(1)
    order = np.argsort(group, kind="stable")
    rows, group = rows[order], group[order]
    cuts = np.flatnonzero(np.diff(group)) + 1
    out_i, out_j = [], []
    for idx in np.split(rows, cuts):
        if len(idx) < 2:
            continue
        x0, x1 = window.x[idx, 0], window.x[idx, -1]
        hit = ((x1[:, None] - x1[None, :]) > eps_x) & ((x0[:, None] - x0[None, :]) < -eps_x)
        a, b = np.nonzero(hit)
        out_i.append(idx[a])
        out_j.append(idx[b])
    if not out_i:
        return none, none
    return np.concatenate(out_i), np.concatenate(out_j)


def rule_vehicle_order(window: Window, trust: np.ndarray, params: DetectionParams) -> np.ndarray:
    """Trust change per row from order violations.

    For a violating pair, both lose ``alpha`` when both are trusted; when
    exactly one is non-positive only that one loses; when both are
    non-positive both lose.
    """
    n = len(window.ids)
    i, j = order_violations(window, params.eps_x)
    if len(i) == 0:
        return np.zeros(n)
    pos = trust > 0
    # a member of a violating pair is spared only if it is trusted and its partner is not
    hit_i = pos[j] | ~pos[i]
    hit_j = pos[i] | ~pos[j]
    count = np.bincount(i[hit_i], minlength=n) + np.bincount(j[hit_j], minlength=n)
    return -params.alpha * count


# --- rule 2: reaction to signals ----------------------------------------------

def signal_events(
    window: Window,
    red_window: np.ndarray | None,
    stopline_m: np.ndarray,
    params: DetectionParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw per-row trust changes from stop-line crossings and dwelling.

    ``red_window`` has shape ``(delta + 1, n_lanes, n_stoplines)``: the red
    mask in force at each report instant of the window.  Returns
    ``(crossing, dwelling)``:

    * crossing the stop line with red all window: ``-alpha``; green all
      window: ``+alpha``;
    * staying within ``eps_x`` of the stop line with green all window:
      ``-alpha``; red all window: ``+alpha``.

    A window in which the colour changes yields nothing.
    """
    n = len(window.ids)
    zero = np.zeros(n)
    if red_window is None or n == 0:
        return zero, zero.copy()
    eps, a = params.eps_x, params.alpha
    ok = window.complete & (window.lane == window.lane[:, -1:]).all(1)
    lane = np.where(ok, window.lane[:, -1], 0)
    h = np.asarray(stopline_m, dtype=float)[None, :]
    col = red_window[:, lane, :]  # (delta+1, n, k)
    all_red = col.all(0)
    all_green = (~col).all(0)
    x0 = np.nan_to_num(window.x[:, :1], nan=-1e9)
    x1 = np.nan_to_num(window.x[:, -1:], nan=-1e9)
    cross = (h - x0 > eps) & (h - x1 < -eps) & ok[:, None]
    dwell = (np.abs(h[:, :, None] - np.nan_to_num(window.x, nan=-1e9)[:, None, :]) < eps).all(-1)
    dwell &= ok[:, None]
    crossing = a * ((cross & all_green).sum(1) - (cross & all_red).sum(1))
    dwelling = a * ((dwell & all_red).sum(1) - (dwell & all_green).sum(1))
    return crossing.astype(float), dwelling.astype(float)


def rule_signal_reaction(window, red_window, stopline_m, params: DetectionParams) -> np.ndarray:
    crossing, dwelling = signal_events(window, red_window, stopline_m, params)
    return crossing + dwelling


# --- rule 3: expected velocity ------------------------------------------------

def expected_velocity(headway, params: DetectionParams):
    """Speed a driver keeping a safe stopping distance would show, m/s."""
    h = np.asarray(headway, dtype=float)
    v = np.maximum(np.minimum(params.v_f, (h - params.h_min) / params.tau), 0.0)
    return float(v) if v.ndim == 0 else v


def headways(
    batch: ReportBatch,
    trusted: np.ndarray,
    red_now: np.ndarray | None,
    stopline_m: np.ndarray,
    params: DetectionParams,
) -> np.ndarray:
    """Distance to the nearest trusted leader or red stop line ahead, metres.

    ``inf`` when neither exists.  A red stop line still counts while the
    reported position is less than ``eps_x / 2`` past it.
    """
    n = len(batch)
    h = np.full(n, np.inf)
    if n == 0:
        return h
    span = 1e7
    key = batch.lane * span + batch.x
    tkey = np.sort(key[trusted])
    if len(tkey):
        pos = np.searchsorted(tkey, key, side="right")
        has = pos < len(tkey)
        lead = tkey[np.minimum(pos, len(tkey) - 1)]
        same = has & (lead // span == batch.lane)
        h = np.where(same, lead - key, h)
    if red_now is not None:
        d = np.asarray(stopline_m, dtype=float)[None, :] - batch.x[:, None]
        ahead = red_now[batch.lane, :] & (d > -params.eps_x / 2)
        d_red = np.where(ahead, np.maximum(d, 0.0), np.inf).min(1)
        h = np.minimum(h, d_red)
    return h


def rule_velocity(v_hat, v, params: DetectionParams):
    """``beta * u``: ``+beta`` when ``|v_hat - v| < eps_v``, else ``-beta * |v_hat - v| / v_f``.

    The penalty saturates at ``-beta`` for claimed speeds beyond ``v_f``.
    """
    diff = np.abs(np.asarray(v_hat, dtype=float) - np.asarray(v, dtype=float))
    u = np.where(diff < params.eps_v, 1.0, -np.minimum(diff / params.v_f, 1.0))
    out = params.beta * u
    return float(out) if out.ndim == 0 else out


# --- rule 4: neighbour detection ------------------------------------------------

def neighbour_votes(batch: ReportBatch, trust: np.ndarray, params: DetectionParams, topology: Topology):
    """Votes of positive-trust witnesses ``j`` about vehicles ``i`` within ``r``.

    Returns ``(i, j, vote)`` arrays: +1 when some entry of ``D_j`` lies within
    ``eps_x`` of ``i``'s claimed position, -1 when none does (including an
    empty ``D_j``).
    """
    n = len(batch)
    none = np.zeros(0, dtype=np.int64)
    if n < 2:
        return none, none, none
    xy = topology.planar(batch.lane, batch.x)
    tree = cKDTree(xy)
    pairs = tree.query_pairs(params.r, output_type="ndarray")
    i = np.concatenate([pairs[:, 0], pairs[:, 1]])
    j = np.concatenate([pairs[:, 1], pairs[:, 0]])
    keep = trust[j] > 0
    i, j = i[keep], j[keep]
    vote = -np.ones(len(i), dtype=np.int64)
    if len(i) and len(batch.nb_x):
        kxy = topology.planar(batch.nb_lane, batch.nb_x)
        close = tree.sparse_distance_matrix(cKDTree(kxy), params.eps_x, output_type="ndarray")
        confirmed = close["i"].astype(np.int64) * n + batch.nb_owner[close["j"]]
        vote[np.isin(i * n + j, confirmed)] = 1
    return i, j, vote


def rule_neighbour(batch: ReportBatch, trust: np.ndarray, params: DetectionParams, topology: Topology) -> np.ndarray:
    """At most one net ``±alpha`` per row: majority of eligible witnesses, ties ignored."""
    i, _, vote = neighbour_votes(batch, trust, params, topology)
    net = np.bincount(i, weights=vote, minlength=len(batch))
    return params.alpha * np.sign(net)


# --- ledger -------------------------------------------------------------------

class TrustLedger:
    """Trust per vehicle id plus the last ``delta`` ticks of reports and signals."""

    def __init__(self, params: DetectionParams = DetectionParams(), topology: Topology | None = None):
        self.params = params
        self.topology = topology or default_topology()
        self.trust: dict[int, float] = {}
        self.history: dict[int, ReportBatch] = {}
        self.red_history: dict[int, np.ndarray] = {}
        self.last_dwell: dict[int, int] = {}

    def __contains__(self, vid) -> bool:
        return int(vid) in self.trust

    def __getitem__(self, vid) -> float:
        return self.trust.get(int(vid), self.params.t0)

    def trust_of(self, ids) -> np.ndarray:
        t0 = self.params.t0
        get = self.trust.get
        return np.array([get(i, t0) for i in np.asarray(ids).tolist()], dtype=float)

    def red_window(self, t: int, red_now) -> np.ndarray | None:
        if red_now is None:
            return None
        cols = [self.red_history.get(t - d) for d in range(self.params.delta, 0, -1)]
        if any(c is None for c in cols):
            return None
        return np.stack(cols + [np.asarray(red_now, dtype=bool)])

    def remember(self, batch: ReportBatch, red_now) -> None:
        self.history[batch.t] = batch
        if red_now is not None:
            self.red_history[batch.t] = np.asarray(red_now, dtype=bool)
        horizon = batch.t - self.params.delta
        for store in (self.history, self.red_history):
            for old in [k for k in store if k < horizon]:
                del store[old]


def trust_deltas(batch: ReportBatch, red_now, ledger: TrustLedger) -> np.ndarray:
    """Summed trust change per row for the enabled rule families."""
    p = ledger.params
    topo = ledger.topology
    n = len(batch)
    delta = np.zeros(n)
    if n == 0 or p.rule_set == Rule.NONE:
        return delta
    trust = ledger.trust_of(batch.ids)
    rules = p.rule_set
    if rules & (Rule.ORDER | Rule.SIGNALS):
        window = build_window(ledger.history, batch, p.delta)
    if rules & Rule.ORDER:
        delta += rule_vehicle_order(window, trust, p)
    if rules & Rule.SIGNALS:
        crossing, dwelling = signal_events(window, ledger.red_window(batch.t, red_now), topo.stopline_m, p)
        fire = np.flatnonzero(dwelling)
        if len(fire):
            t = batch.t
            last = ledger.last_dwell
            for row in fire.tolist():
                vid = int(batch.ids[row])
                if t - last.get(vid, -10**9) > p.delta:
                    last[vid] = t
                else:
                    dwelling[row] = 0.0
        delta += crossing + dwelling
    if rules & Rule.VELOCITY:
        red = None if red_now is None else np.asarray(red_now, dtype=bool)
        h = headways(batch, trust > 0, red, topo.stopline_m, p)
        delta += rule_velocity(expected_velocity(h, p), batch.v, p)
    if rules & Rule.NEIGHBOUR:
        delta += rule_neighbour(batch, trust, p, topo)
    return delta


def update_trust(batch: ReportBatch, red_now, ledger: TrustLedger) -> TrustLedger:
    """Apply one tick of rule updates to ``ledger`` (in place) and return it.

    Unseen ids start at ``t0``; all enabled rules are evaluated against the
    trust levels from before this tick, summed, then applied and clamped.
    """
    p = ledger.params
    if len(batch):
        new = ledger.trust_of(batch.ids) + trust_deltas(batch, red_now, ledger)
        new = np.clip(new, p.t_min, p.t_max)
        ledger.trust.update(zip(batch.ids.tolist(), new.tolist()))
    ledger.remember(batch, red_now)
    return ledger


def accepted_mask(batch: ReportBatch, ledger: TrustLedger) -> np.ndarray:
    if not ledger.params.filtering:
        return np.ones(len(batch), dtype=bool)
    return ledger.trust_of(batch.ids) > 0


def filter_reports(batch: ReportBatch, ledger: TrustLedger) -> ReportBatch:
    """Reports whose sender currently has positive trust, order preserved."""
    return batch.subset(accepted_mask(batch, ledger))
