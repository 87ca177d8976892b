"""Exhaustive reference evaluations of the detection rules.

Everything here works on plain Python lists of per-tick dicts
``{vehicle_id: (lane, x, v, [(x_k, lane_k), ...])}`` and loops over all
pairs / windows literally, sharing no code with the vectorized rules.
"""
import math


def window_ticks(t, delta):
    return list(range(t - delta, t + 1))


def present_throughout(trace, vid, ticks):
    return all(s in trace and vid in trace[s] for s in ticks)


def order_deltas(trace, t, delta, eps_x, alpha, trust):
    """Per-vehicle change of the order rule at tick ``t``."""
    ticks = window_ticks(t, delta)
    out = {vid: 0.0 for vid in trace[t]}
    ids = sorted(trace[t])
    for i in ids:
        for j in ids:
            if i == j:
                continue
            if not (present_throughout(trace, i, ticks) and present_throughout(trace, j, ticks)):
                continue
            if any(trace[s][i][0] != trace[s][j][0] for s in ticks):
                continue
            now = trace[t][i][1] - trace[t][j][1]
            then = trace[t - delta][i][1] - trace[t - delta][j][1]
            if not (now > eps_x and then < -eps_x):
                continue
            ti, tj = trust[i] > 0, trust[j] > 0
            if ti and tj:
                charged = [i, j]
            elif ti and not tj:
                charged = [j]
            elif tj and not ti:
                charged = [i]
            else:
                charged = [i, j]
            for c in charged:
                out[c] -= alpha
    return out


def signal_deltas(trace, red, t, delta, eps_x, alpha, stoplines):
    """``(crossing, dwelling)`` changes per vehicle; ``red[s][lane][k]``."""
    ticks = window_ticks(t, delta)
    crossing = {vid: 0.0 for vid in trace[t]}
    dwelling = {vid: 0.0 for vid in trace[t]}
    if any(s not in red for s in ticks):
        return crossing, dwelling
    for vid in trace[t]:
        if not present_throughout(trace, vid, ticks):
            continue
        lanes = {trace[s][vid][0] for s in ticks}
        if len(lanes) != 1:
            continue
        lane = lanes.pop()
        for k, h in enumerate(stoplines):
            colours = [red[s][lane][k] for s in ticks]
            all_red, all_green = all(colours), not any(colours)
            x_first, x_last = trace[t - delta][vid][1], trace[t][vid][1]
            if h - x_first > eps_x and h - x_last < -eps_x:
                crossing[vid] += alpha if all_green else -alpha if all_red else 0.0
            if all(abs(h - trace[s][vid][1]) < eps_x for s in ticks):
                dwelling[vid] += alpha if all_red else -alpha if all_green else 0.0
    return crossing, dwelling


def headway(reports, vid, trusted, red_now, stoplines, eps_x):
    lane, x, _, _ = reports[vid]
    best = math.inf
    for j, (lj, xj, _, _) in reports.items():
        if j != vid and trusted[j] and lj == lane and xj > x:
            best = min(best, xj - x)
    if red_now is not None:
        for k, h in enumerate(stoplines):
            if red_now[lane][k] and h - x > -eps_x / 2:
                best = min(best, max(h - x, 0.0))
    return best


def expected_speed(h, v_f, h_min, tau):
    return max(min(v_f, (h - h_min) / tau), 0.0)


def velocity_delta(v_hat, v, beta, eps_v, v_f):
    d = abs(v_hat - v)
    if d < eps_v:
        return beta
    return -beta * min(d / v_f, 1.0)


def neighbour_deltas(reports, trust, r, eps_x, alpha, planar):
    """Majority of witness votes per vehicle; ``planar(lane, x) -> (px, py)``."""
    out = {}
    for i, (li, xi, _, _) in reports.items():
        pi = planar(li, xi)
        net = 0
        for j, (lj, xj, _, dj) in reports.items():
            if j == i or trust[j] <= 0:
                continue
            if math.dist(pi, planar(lj, xj)) > r:
                continue
            seen = any(math.dist(pi, planar(lk, xk)) <= eps_x for xk, lk in dj)
            net += 1 if seen else -1
        out[i] = alpha * (net > 0) - alpha * (net < 0)
    return out
