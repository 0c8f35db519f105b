"""Independent reference computations used to derive expected test values.

Nothing here calls into the library's inference, kinematics or metric code;
only plain data (variables, rules, frames) is read from library objects.
"""
import math

import numpy as np


def tri(x, a, b, c):
    # straight from the piecewise definition
    if x == b:
        return 1.0
    if x <= a or x >= c:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    return (c - x) / (c - b)


def _degree(var, label, x, negated):
    lo, hi = var.universe
    x = min(max(x, lo), hi)
    mf = dict(var.terms)[label]
    mu = tri(x, mf.alpha, mf.beta, mf.gamma)
    return 1.0 - mu if negated else mu


def rule_strength(rb, rule, inputs):
    if any(inputs[c.variable] is None for c in rule.antecedents):
        return 0.0
    variables = {v.name: v for v in rb.inputs}
    # OR of AND-chains, AND binding tighter
    chains, chain = [], [rule.antecedents[0]]
    for conn, clause in zip(rule.connectives, rule.antecedents[1:]):
        if conn == "OR":
            chains.append(chain)
            chain = [clause]
        else:
            chain.append(clause)
    chains.append(chain)
    best = 0.0
    for ch in chains:
        best = max(best, min(_degree(variables[c.variable], c.term, inputs[c.variable], c.negated) for c in ch))
    return best * rule.weight


def weighted_average(rb, inputs):
    terms = dict(rb.output.terms)
    num = den = 0.0
    for rule in rb.rules:
        w = rule_strength(rb, rule, inputs)
        mf = terms[rule.consequent[1]]
        num += w * (mf.alpha + mf.beta + mf.gamma) / 3.0
        den += w
    return num / den


def aggregate_centroid(rb, inputs, resolution=10_000):
    """Clip/max/centroid on a midpoint grid, vectorised with numpy."""
    lo, hi = rb.output.universe
    xs = lo + (np.arange(resolution) + 0.5) * (hi - lo) / resolution
    agg = np.zeros_like(xs)
    terms = dict(rb.output.terms)
    for rule in rb.rules:
        w = rule_strength(rb, rule, inputs)
        if w <= 0:
            continue
        mf = terms[rule.consequent[1]]
        mu = np.array([tri(x, mf.alpha, mf.beta, mf.gamma) for x in xs])
        agg = np.maximum(agg, np.minimum(mu, w))
    return float((xs * agg).sum() / agg.sum())


def fk(l1, l2, l3, q):
    t1, t2, t3 = q
    r = l2 * math.cos(t2) + l3 * math.cos(t2 + t3)
    return (math.cos(t1) * r, math.sin(t1) * r, l1 + l2 * math.sin(t2) + l3 * math.sin(t2 + t3))


def trapezoid_mean(ts, vs):
    area = sum(0.5 * (vs[i] + vs[i - 1]) * (ts[i] - ts[i - 1]) for i in range(1, len(ts)))
    return area / (ts[-1] - ts[0])


def nearest_index(ts, t):
    best = 0
    for i, ti in enumerate(ts):
        if abs(ti - t) < abs(ts[best] - t):
            best = i
    return best


def symmetric_aligned_mean(ta, tb, dist):
    """Brute-force two-way nearest-timestamp mean of ``dist(i, j)`` over the overlap."""
    lo, hi = max(ta[0], tb[0]), min(ta[-1], tb[-1])
    fwd = [dist(i, nearest_index(tb, t)) for i, t in enumerate(ta) if lo <= t <= hi]
    bwd = [dist(nearest_index(ta, t), j) for j, t in enumerate(tb) if lo <= t <= hi]
    means = [sum(side) / len(side) for side in (fwd, bwd) if side]
    return sum(means) / len(means)


def wrapped_deg(a, b):
    d = (a - b) % 360.0
    return min(d, 360.0 - d)
