"""Independent brute-force oracles used to cross-check the library.

These deliberately avoid the library's code paths: plain loops, Fraction or
fsum arithmetic, exhaustive scans.
"""

import math


def brute_max(labels, values):
    best_i = 0
    for i in range(1, len(values)):
        if values[i] > values[best_i]:
            best_i = i
    ties = [l for l, v in zip(labels, values) if v == values[best_i]]
    return labels[best_i], values[best_i], len(ties)


def brute_min(labels, values):
    best_i = 0
    for i in range(1, len(values)):
        if values[i] < values[best_i]:
            best_i = i
    ties = [l for l, v in zip(labels, values) if v == values[best_i]]
    return labels[best_i], values[best_i], len(ties)


def brute_range(values):
    hi = lo = values[0]
    for v in values[1:]:
        hi = max(hi, v)
        lo = min(lo, v)
    return hi - lo


def brute_share(values, idx):
    total = math.fsum(values)
    return values[idx] / total * 100.0


def brute_pearson_float(xs, ys):
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = math.fsum((a - mx) ** 2 for a in xs)
    syy = math.fsum((b - my) ** 2 for b in ys)
    if sxx == 0 or syy == 0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


def brute_zscore(points, idx):
    rest = [p for i, p in enumerate(points) if i != idx]
    target = points[idx]
    worst = 0.0
    for axis in range(len(target)):
        vals = [p[axis] for p in rest]
        mean = math.fsum(vals) / len(vals)
        var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
        std = math.sqrt(var)
        diff = abs(target[axis] - mean)
        z = math.inf if std == 0 and diff > 0 else (0.0 if std == 0 else diff / std)
        worst = max(worst, z)
    return worst


def brute_cosine(a, b):
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return dot / (na * nb)


def brute_histogram(values, n_bins):
    lo, hi = min(values), max(values)
    if lo == hi:
        return [lo, hi], [len(values)]
    width = (hi - lo) / n_bins
    counts = [0] * n_bins
    for v in values:
        idx = int((v - lo) / width)
        if idx >= n_bins:
            idx = n_bins - 1
        counts[idx] += 1
    edges = [lo + i * width for i in range(n_bins)] + [hi]
    return edges, counts
