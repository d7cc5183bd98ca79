"""Brute-force reference implementations used as independent oracles.

Everything here recomputes results along a different route than the package:
BFS over products for spheres and distances, explicit sphere enumeration for
averages, and plain Gaussian elimination for linear solves.
"""

from __future__ import annotations

from fractions import Fraction


def bfs_spheres(spec, radius):
    """Level sets of the Cayley graph by BFS over products (not the automaton)."""
    dist = {"": 0}
    frontier = [""]
    levels = [[""]]
    for d in range(radius):
        nxt = []
        for w in frontier:
            for c in spec.chars:
                v = spec.mul(w, c)
                if v not in dist:
                    dist[v] = d + 1
                    nxt.append(v)
        frontier = nxt
        levels.append(sorted(nxt, key=lambda w: (len(w), w)))
    return levels


def bfs_distance(spec, x, y, radius=20):
    """Graph distance by BFS from x, independent of normal-form lengths."""
    seen = {x}
    frontier = [x]
    d = 0
    while frontier:
        if y in frontier:
            return d
        d += 1
        if d > radius:
            raise RuntimeError("BFS radius exhausted")
        nxt = []
        for w in frontier:
            for c in spec.chars:
                v = spec.mul(w, c)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    raise RuntimeError("disconnected?")


def enumeration_average(spec, action, f, x, n, reps):
    """Spherical average by explicit enumeration of S(e, n)."""
    acc = 0
    tot = 0
    for g in spec.sphere(n):
        for k in reps:
            acc += f[action.apply(g, action.apply(k, x))]
            tot += 1
    return Fraction(acc, tot)


def enumeration_ball_average(spec, action, f, x, n, reps):
    acc = 0
    tot = 0
    for j in range(n + 1):
        for g in spec.sphere(j):
            for k in reps:
                acc += f[action.apply(g, action.apply(k, x))]
                tot += 1
    return Fraction(acc, tot)


def gauss_solve_unique(a_rows, b):
    """Plain Gaussian elimination for square systems with a unique solution."""
    n = len(a_rows)
    aug = [[Fraction(x) for x in row] + [Fraction(b[i])] for i, row in enumerate(a_rows)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [x * inv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return [aug[i][n] for i in range(n)]
