"""Reference implementations used as independent test oracles."""

import numpy as np


def direct_lookup_ovrv(lead_speed, p, dt, s0, v0, L=4.8):
    """OVRV rollout reading delayed samples by index from full history lists.

    A whole-step delay reads one stored sample. A delay halfway between two
    steps averages the two neighbouring samples. Indices before the start
    read the initial state.
    """
    steps = p.tau / dt
    n = int(round(steps))
    half = abs(steps - n) > 1e-9
    if half:
        n = int(np.floor(steps))
        assert abs(steps - n - 0.5) < 1e-9, "only whole or half-step delays"
    speeds, gaps = [v0], [s0]
    x, xl = 0.0, 0.0
    for i in range(len(lead_speed) - 1):
        j = max(i - n, 0)
        if half:
            k = max(i - n - 1, 0)
            s_d = 0.5 * (gaps[j] + gaps[k])
            vl_d = 0.5 * (lead_speed[j] + lead_speed[k])
        else:
            s_d, vl_d = gaps[j], lead_speed[j]
        v = speeds[i]
        a = p.k1 * (s_d - p.eta - p.t_h * v) + p.k2 * (vl_d - v)
        v_new = max(v + a * dt, 0.0)
        x = x + 0.5 * (v + v_new) * dt
        xl = xl + 0.5 * (lead_speed[i] + lead_speed[i + 1]) * dt
        speeds.append(v_new)
        gaps.append(xl + (s0 + L) - x - L)
    return np.array(speeds), np.array(gaps)


def brute_force_rank(points):
    """Peel non-dominated layers with explicit pairwise loops."""
    def dominates(a, b):
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    ranks = [0] * len(points)
    left = set(range(len(points)))
    r = 1
    while left:
        layer = {i for i in left if not any(dominates(points[j], points[i]) for j in left if j != i)}
        for i in layer:
            ranks[i] = r
        left -= layer
        r += 1
    return ranks
