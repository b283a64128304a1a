"""Slow, obviously-correct reference implementations used as test oracles."""
import math


def ecdf(sample, x):
    return sum(1 for v in sample if v <= x) / len(sample)


def wasserstein_brute(a, b):
    grid = sorted(set(a) | set(b))
    return sum(abs(ecdf(a, lo) - ecdf(b, lo)) * (hi - lo) for lo, hi in zip(grid, grid[1:]))


def ks_brute(a, b):
    return max(abs(ecdf(a, x) - ecdf(b, x)) for x in set(a) | set(b))


def mmd_brute(A, B, sigma):
    def k(x, y):
        return math.exp(-sum((p - q) ** 2 for p, q in zip(x, y)) / sigma ** 2)

    def mean_k(P, Q):
        return sum(k(p, q) for p in P for q in Q) / (len(P) * len(Q))

    return mean_k(A, A) + mean_k(B, B) - 2 * mean_k(A, B)
