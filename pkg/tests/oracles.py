"""Slow, obviously-correct reference implementations used as test oracles."""

import itertools
import math
from collections import Counter

import numpy as np


def nmi_brute(a, b):
    n = len(a)
    ca, cb, cab = Counter(a), Counter(b), Counter(zip(a, b))
    ha = -sum(c / n * math.log(c / n) for c in ca.values())
    hb = -sum(c / n * math.log(c / n) for c in cb.values())
    if ha == 0 or hb == 0:
        return 1.0 if ha == hb else 0.0
    mi = sum(c / n * math.log((c / n) / (ca[x] / n * cb[y] / n)) for (x, y), c in cab.items())
    return mi / math.sqrt(ha * hb)


def ari_brute(a, b):
    """Pair counting over all n(n-1)/2 pairs."""
    n = len(a)
    both = same_a = same_b = 0
    for i, j in itertools.combinations(range(n), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        same_a += sa
        same_b += sb
        both += sa and sb
    total = n * (n - 1) / 2
    expected = same_a * same_b / total
    top = (same_a + same_b) / 2
    if top == expected:
        return 1.0 if same_a == same_b else 0.0
    return (both - expected) / (top - expected)


def acc_brute(pred, truth):
    """Best one-to-one relabeling by exhaustive search over permutations."""
    pl, tl = sorted(set(pred)), sorted(set(truth))
    k = max(len(pl), len(tl))
    pl = pl + [("pad", i) for i in range(k - len(pl))]
    tl = tl + [("pad", i) for i in range(k - len(tl))]
    best = 0
    for perm in itertools.permutations(tl):
        m = dict(zip(pl, perm))
        best = max(best, sum(m[p] == t for p, t in zip(pred, truth)))
    return best / len(pred)


def pmi_brute(dense, i, j):
    p = dense / dense.sum()
    return math.log(p[i, j] / (p[i, :].sum() * p[:, j].sum()))


def fd_grad(f, x, h=1e-6):
    """Central finite differences of scalar ``f`` at ``x``."""
    g = np.empty_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g
