"""Growth rate, Perron data of the block matrix, invariant densities, and the
measure-theoretic identities realized as finite checks.

All matrix/vector arithmetic runs in an exact-rational mode by default for
matrices up to EXACT_SIZE_LIMIT; beyond that (or on demand) it falls back to
floats.  Reports record which mode produced each number.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NoConvergence, NotATree, NotInRecurrentCone, PatchTooSmall
from .groups import GroupSpec, Word, common_prefix_len, free_group
from .blockgraph import AdjacencyMatrix, BlockGraph
from .horofn import Ray, block_of, busemann_patch, parent_at, sphere_patch

EXACT_SIZE_LIMIT = 200


@dataclass(frozen=True)
class DensityVector:
    """Nonnegative weights indexed by block-graph vertices, tagged with a level."""

    weights: tuple
    level: int

    @property
    def total(self):
        return sum(self.weights)

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights)

    def normalized(self) -> "DensityVector":
        t = self.total
        if t == 0:
            raise ValueError("cannot normalize the zero vector")
        return DensityVector(tuple(w / t for w in self.weights), self.level)

    def __len__(self):
        return len(self.weights)


# ------------------------------------------------------------- exact linalg


def mat_vec(m: Sequence[Sequence[int]], v: Sequence) -> list:
    return [sum(row[j] * v[j] for j in range(len(v)) if row[j]) for row in m]


def mat_mul(a, b):
    n, k, p = len(a), len(b), len(b[0])
    out = [[0] * p for _ in range(n)]
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for j in range(k):
            if ai[j]:
                aij = ai[j]
                bj = b[j]
                for t in range(p):
                    oi[t] += aij * bj[t]
    return out


def mat_pow(m, k: int):
    n = len(m)
    result = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    base = [list(row) for row in m]
    while k:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        k >>= 1
    return result


def _solve_exact(a_rows: list[list[Fraction]], b: list[Fraction]):
    """Gaussian elimination over the rationals.

    Returns (particular solution, nullspace basis) or None if inconsistent.
    """
    m = len(a_rows)
    n = len(a_rows[0]) if m else 0
    aug = [[Fraction(x) for x in row] + [Fraction(b[i])] for i, row in enumerate(a_rows)]
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pr = aug[r]
        inv = 1 / pr[c]
        aug[r] = [x * inv for x in pr]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if aug[i][n] != 0:
            return None
    x0 = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x0[c] = aug[i][n]
    free_cols = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free_cols:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for i, c in enumerate(pivots):
            vec[c] = -aug[i][fc]
        basis.append(vec)
    return x0, basis


def solve_min_norm(a_rows, b):
    """Exact minimum-l2-norm solution of A x = b, or None if inconsistent.

    When the system is underdetermined the minimum-norm representative is the
    canonical choice; it is exact, deterministic, and fixed by every symmetry
    of the system.
    """
    solved = _solve_exact(a_rows, b)
    if solved is None:
        return None
    x0, basis = solved
    if not basis:
        return x0
    k = len(basis)
    gram = [[sum(basis[i][t] * basis[j][t] for t in range(len(x0))) for j in range(k)] for i in range(k)]
    rhs = [-sum(basis[i][t] * x0[t] for t in range(len(x0))) for i in range(k)]
    sol = _solve_exact(gram, rhs)
    if sol is None:  # pragma: no cover - Gram matrices of independent vectors are invertible
        raise ArithmeticError("Gram system inconsistent")
    coeffs = sol[0]
    return [x0[t] + sum(coeffs[i] * basis[i][t] for i in range(k)) for t in range(len(x0))]


# ------------------------------------------------------ SCC structure and period


def _succ_lists(M: AdjacencyMatrix) -> list[list[int]]:
    """succ[b] = children blocks c with an edge b -> c (entries[c][b] = 1)."""
    n = M.n
    succ = [[] for _ in range(n)]
    for c in range(n):
        row = M.entries[c]
        for b in range(n):
            if row[b]:
                succ[b].append(c)
    return succ


def strongly_connected_components(succ: list[list[int]]) -> list[list[int]]:
    """Kosaraju's algorithm, iterative; components in a deterministic order."""
    n = len(succ)
    order: list[int] = []
    seen = [False] * n
    for s in range(n):
        if seen[s]:
            continue
        stack = [(s, 0)]
        seen[s] = True
        while stack:
            v, ptr = stack.pop()
            if ptr < len(succ[v]):
                stack.append((v, ptr + 1))
                w = succ[v][ptr]
                if not seen[w]:
                    seen[w] = True
                    stack.append((w, 0))
            else:
                order.append(v)
    pred = [[] for _ in range(n)]
    for v in range(n):
        for w in succ[v]:
            pred[w].append(v)
    comp = [-1] * n
    comps: list[list[int]] = []
    for s in reversed(order):
        if comp[s] != -1:
            continue
        c = len(comps)
        stack = [s]
        comp[s] = c
        members = [s]
        while stack:
            v = stack.pop()
            for w in pred[v]:
                if comp[w] == -1:
                    comp[w] = c
                    stack.append(w)
                    members.append(w)
        comps.append(sorted(members))
    return comps


def _scc_period(succ, members: list[int]) -> int:
    """gcd of cycle lengths within one strongly connected component (0 if acyclic)."""
    inside = set(members)
    root = members[0]
    level = {root: 0}
    queue = [root]
    g = 0
    while queue:
        nxt = []
        for v in queue:
            for w in succ[v]:
                if w not in inside:
                    continue
                if w in level:
                    g = math.gcd(g, level[v] + 1 - level[w])
                else:
                    level[w] = level[v] + 1
                    nxt.append(w)
        queue = nxt
    return abs(g)


def recurrent_indices(M: AdjacencyMatrix) -> list[int]:
    """Vertices lying on some directed cycle."""
    succ = _succ_lists(M)
    out = []
    for members in strongly_connected_components(succ):
        if len(members) > 1 or members[0] in succ[members[0]]:
            out.extend(members)
    return sorted(out)


def find_period(M: AdjacencyMatrix) -> int:
    """lcm of the cyclic periods of the recurrent components of M.

    Verifies the defining property: on each recurrent component, M^p splits
    into cyclic classes whose diagonal blocks are primitive.
    """
    succ = _succ_lists(M)
    comps = strongly_connected_components(succ)
    periods = []
    recurrent = []
    for members in comps:
        if len(members) > 1 or members[0] in succ[members[0]]:
            periods.append(_scc_period(succ, members))
            recurrent.append(members)
    if not periods:
        return 1
    p = 1
    for q in periods:
        p = p * q // math.gcd(p, q)
    _verify_primitive_classes(M, recurrent, succ, p)
    return p


def _verify_primitive_classes(M: AdjacencyMatrix, recurrent, succ, p: int):
    for members in recurrent:
        inside = set(members)
        root = members[0]
        level = {root: 0}
        queue = [root]
        while queue:
            nxt = []
            for v in queue:
                for w in succ[v]:
                    if w in inside and w not in level:
                        level[w] = level[v] + 1
                        nxt.append(w)
            queue = nxt
        q = _scc_period(succ, members)
        classes: dict[int, list[int]] = {}
        for v in members:
            classes.setdefault(level[v] % q if q else 0, []).append(v)
        sub = [[M.entries[i][j] for j in members] for i in members]
        local = {v: k for k, v in enumerate(members)}
        subp = mat_pow(sub, p)
        for cls in classes.values():
            idx = [local[v] for v in cls]
            block = [[subp[i][j] for j in idx] for i in idx]
            if not _is_primitive(block):
                raise ArithmeticError(
                    f"period {p} does not make the class {cls} primitive"
                )


def _is_primitive(block) -> bool:
    n = len(block)
    if n == 0:
        return True
    power = [row[:] for row in block]
    wielandt = n * n - 2 * n + 2 if n > 1 else 1
    for _ in range(max(wielandt, 1)):
        if all(all(x > 0 for x in row) for row in power):
            return True
        power = mat_mul(power, block)
        power = [[min(x, 1) for x in row] for row in power]  # keep entries bounded
    return all(all(x > 0 for x in row) for row in power)


# ------------------------------------------------------------------ growth


@dataclass
class GrowthData:
    """Exact sphere sizes with per-step ratios and a log-slope growth estimate."""

    sphere_sizes: list[int]
    rate_estimate: float
    ratios: list[Fraction]

    def to_dict(self) -> dict:
        return {
            "sphere_sizes": self.sphere_sizes,
            "rate_estimate": self.rate_estimate,
            "ratios": [str(r) for r in self.ratios],
        }


def growth_data(spec: GroupSpec, max_n: int) -> GrowthData:
    sizes = [spec.sphere_size(n) for n in range(max_n + 1)]
    ratios = [Fraction(sizes[n + 1], sizes[n]) for n in range(max_n)]
    lo = max(1, max_n // 2)
    xs = list(range(lo, max_n + 1))
    ys = [math.log(sizes[n]) for n in xs]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    denom = sum((x - xbar) ** 2 for x in xs)
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / denom if denom else 0.0
    return GrowthData(sphere_sizes=sizes, rate_estimate=slope, ratios=ratios)


# ------------------------------------------------------------------- Perron


@dataclass
class PerronData:
    eigenvalue: object  # Fraction in exact mode, float otherwise
    eigenvector: DensityVector
    period: int
    mode: str
    iterations: int
    residual: float

    def to_dict(self) -> dict:
        return {
            "eigenvalue": str(self.eigenvalue),
            "eigenvalue_float": float(self.eigenvalue),
            "eigenvector": [str(w) for w in self.eigenvector.weights],
            "period": self.period,
            "mode": self.mode,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def perron(
    M: AdjacencyMatrix,
    p: int,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    exact_iter_cap: int = 64,
) -> PerronData:
    """Dominant eigenvalue and l1-normalized nonnegative eigenvector of M^p.

    Power iteration from the uniform vector; runs in exact rationals first and
    reports mode "exact" when an exact fixpoint is reached within the cap,
    otherwise falls back to floats at the same deterministic start.
    """
    n = M.n
    mp = mat_pow(M.to_rows(), p)
    if n <= EXACT_SIZE_LIMIT:
        v = [Fraction(1, n)] * n
        for it in range(exact_iter_cap):
            w = mat_vec(mp, v)
            s = sum(w)
            if s == 0:
                break
            w = [x / s for x in w]
            if w == v:
                lam = s  # M^p v = lam v exactly
                residual = 0.0
                return PerronData(
                    eigenvalue=lam,
                    eigenvector=DensityVector(tuple(w), level=0),
                    period=p,
                    mode="exact",
                    iterations=it + 1,
                    residual=residual,
                )
            v = w
    # float fallback
    a = np.array(mp, dtype=float)
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(max_iter):
        w = a @ v
        s = w.sum()
        if s == 0:
            raise NoConvergence("matrix power annihilates the uniform vector")
        w /= s
        if np.abs(w - v).sum() <= tol * np.abs(v).sum():
            lam = s
            v = w
            residual = float(np.abs(a @ v - lam * v).sum())
            return PerronData(
                eigenvalue=float(lam),
                eigenvector=DensityVector(tuple(float(x) for x in v), level=0),
                period=p,
                mode="float",
                iterations=it + 1,
                residual=residual,
            )
        v = w
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


# --------------------------------------------------------- density recursion


@dataclass
class RecursionReport:
    levels: list[int]
    max_error: float
    exact: bool
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "max_error": self.max_error,
            "exact": self.exact,
            "violations": self.violations,
            "ok": self.ok,
        }


def density_recursion_check(
    vectors: Sequence[DensityVector], M: AdjacencyMatrix, tol: float = 0.0
) -> RecursionReport:
    """Check the level recursion: vector at level n equals M applied to level n+1."""
    rows = M.to_rows()
    violations = []
    max_err = 0.0
    exact = all(v.exact for v in vectors)
    for a, b in zip(vectors, vectors[1:]):
        if b.level != a.level + 1:
            raise ValueError("vectors must be at consecutive levels")
        predicted = mat_vec(rows, list(b.weights))
        for i, (x, y) in enumerate(zip(list(a.weights), predicted)):
            err = abs(x - y)
            max_err = max(max_err, float(err))
            bad = (err != 0) if exact else (float(err) > tol)
            if bad:
                violations.append(
                    {"level": a.level, "entry": i, "value": str(x), "predicted": str(y)}
                )
    return RecursionReport(
        levels=[v.level for v in vectors],
        max_error=max_err,
        exact=exact,
        violations=violations,
    )


# -------------------------------------------------------------- shift alpha


def alpha_presolve(v: DensityVector, M: AdjacencyMatrix) -> list[Fraction]:
    """Exact solution w of M w = v supported on the recurrent vertices (signed).

    Underdetermined systems are resolved by the exact minimum-norm solution,
    which is canonical, deterministic, and fixed by every symmetry of the
    matrix.  Raises NotInRecurrentCone when no solution exists at all or when
    v charges a non-recurrent vertex.
    """
    n = M.n
    rec = recurrent_indices(M)
    rec_set = set(rec)
    weights = list(v.weights)
    if any(weights[i] != 0 for i in range(n) if i not in rec_set):
        raise NotInRecurrentCone("vector has mass outside the recurrent vertices")
    if not all(isinstance(w, (int, Fraction)) for w in weights):
        weights = [Fraction(str(float(w))) for w in weights]
    a_rows = [[Fraction(M.entries[i][j]) for j in rec] for i in range(n)]
    b = [Fraction(weights[i]) for i in range(n)]
    sol = solve_min_norm(a_rows, b)
    if sol is None:
        raise NotInRecurrentCone("M w = v has no solution supported on the recurrent part")
    full = [Fraction(0)] * n
    for c, x in zip(rec, sol):
        full[c] = x
    return full


def alpha_shift(v: DensityVector, M: AdjacencyMatrix, p: int) -> DensityVector:
    """One application of the density shift: the normalized w with M w = v.

    w must be nonnegative on the recurrent vertices for the shift to define a
    density; otherwise NotInRecurrentCone is raised and ``alpha_presolve``
    exposes the signed exact solve for diagnostics.  Applied p times to a
    Perron eigenvector of M^p the shift is the identity.
    """
    full = alpha_presolve(v, M)
    if any(x < 0 for x in full):
        raise NotInRecurrentCone(
            f"M w = v has no nonnegative solution on the recurrent part "
            f"(exact solve: {[str(x) for x in full]})"
        )
    total = sum(full)
    if total == 0:
        raise NotInRecurrentCone("shifted vector vanishes")
    return DensityVector(tuple(x / total for x in full), level=v.level)


# ------------------------------------------------------- empirical densities


@dataclass
class EmpiricalDensities:
    n: int
    vector: DensityVector
    counts: list[int]
    unknown_blocks: list[str]

    def to_dict(self, graph: BlockGraph) -> dict:
        return {
            "n": self.n,
            "counts": self.counts,
            "weights": [str(w) for w in self.vector.weights],
            "unknown_blocks": self.unknown_blocks,
            "vertex_keys": [v.key() for v in graph.vertices],
        }


def empirical_block_densities(
    spec: GroupSpec, n: int, H: int, W: int, graph: BlockGraph
) -> EmpiricalDensities:
    """Normalized block counts of the translated sphere functions g.h_n, g in S(e, n)."""
    if n < H:
        raise PatchTooSmall(f"need n >= H (= {H}) for an {H}-step parent chain, got {n}")
    counts = [0] * len(graph.vertices)
    unknown: list[str] = []
    sphere = spec.sphere(n)
    for g in sphere:
        patch = sphere_patch(spec, g, n, H + W + 1)
        blk = block_of(patch, H, W)
        if blk in graph:
            counts[graph.index_of(blk)] += 1
        else:
            unknown.append(blk.key())
    total = len(sphere)
    vec = DensityVector(tuple(Fraction(c, total) for c in counts), level=0)
    return EmpiricalDensities(n=n, vector=vec, counts=counts, unknown_blocks=unknown)


# ------------------------------------------------------------ tail-mass law


@dataclass
class TailMassReport:
    kmax: int
    rows: list[dict]
    partial_sum_defect: float
    exact: bool
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "kmax": self.kmax,
            "rows": self.rows,
            "partial_sum_defect": self.partial_sum_defect,
            "exact": self.exact,
            "violations": self.violations,
            "ok": self.ok,
        }


def tail_mass_check(
    eigvec: DensityVector,
    rate: float,
    kmax: int,
    M: AdjacencyMatrix,
    growth_factor: Fraction | None = None,
) -> TailMassReport:
    """Build the level masses of the shift-invariant measure and test the geometric law.

    Level k carries mass (1 - rho) rho^k with rho = 1/e^{rate}.  When the
    per-step growth e^{rate} is rational, pass it as ``growth_factor`` and the
    whole check runs exactly; otherwise floats with a 1e-12 comparison are
    used.  The level vectors are regenerated through the matrix recursion so
    the check also re-verifies it.
    """
    rows_m = M.to_rows()
    exact = growth_factor is not None and eigvec.exact
    lam = Fraction(growth_factor) if exact else math.exp(rate)
    rho = 1 / lam
    v = eigvec.normalized()
    violations: list[dict] = []
    out_rows: list[dict] = []
    mass0 = (1 - rho)
    level = [w * mass0 for w in v.weights]
    partial = 0 if exact else 0.0
    for k in range(kmax + 1):
        mass = sum(level)
        expected = mass0 * rho**k
        err = abs(mass - expected)
        bad = (err != 0) if exact else (float(err) > 1e-12)
        if bad:
            violations.append({"k": k, "mass": str(mass), "expected": str(expected)})
        partial += mass
        out_rows.append({"k": k, "mass": str(mass), "expected": str(expected)})
        nxt = [w * rho for w in level]
        back = mat_vec(rows_m, nxt)
        recon_err = max(abs(x - y) for x, y in zip(back, level))
        recon_bad = (recon_err != 0) if exact else (float(recon_err) > 1e-12)
        if recon_bad:
            violations.append({"k": k, "recursion_error": str(recon_err)})
        level = nxt
    defect = abs(1 - partial)
    return TailMassReport(
        kmax=kmax,
        rows=out_rows,
        partial_sum_defect=float(defect),
        exact=exact,
        violations=violations,
    )


# ------------------------------------------ quasiconformal tree (free group)


@dataclass
class QCReport:
    g: str
    cylinder: str
    cylinder_mass: Fraction
    pushforward_mass: Fraction
    busemann_at_g: int
    predicted_factor: Fraction

    @property
    def ok(self) -> bool:
        return self.pushforward_mass == self.predicted_factor * self.cylinder_mass

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "cylinder": self.cylinder,
            "cylinder_mass": str(self.cylinder_mass),
            "pushforward_mass": str(self.pushforward_mass),
            "busemann_at_g": self.busemann_at_g,
            "predicted_factor": str(self.predicted_factor),
            "ok": self.ok,
        }


def quasiconformal_check_tree(
    rank: int, g_text: str, cylinder_text: str, spec: GroupSpec | None = None
) -> QCReport:
    """Exact Radon-Nikodym check on the free-group boundary.

    The boundary measure is the uniform (Patterson-Sullivan) measure on
    infinite reduced words; cylinder masses are rational.  The pushforward
    mass of a cylinder under the boundary translation by g must equal the
    cylinder mass times (2r-1)^(-h(g)) where h is the Busemann value of any
    boundary point in the cylinder, with h(e) = 0.
    """
    spec = spec or free_group(rank)
    if spec.family != "free":
        raise NotATree(f"family {spec.family!r} is not a free group")
    q = len(spec.chars)
    g = spec.normalize(spec.parse(g_text))
    w = spec.normalize(spec.parse(cylinder_text))
    if not w:
        raise ValueError("cylinder word must be nonempty")
    if len(w) < len(g) and common_prefix_len(g, w) == len(w):
        raise ValueError(
            "cylinder lies on the geodesic to g; extend it so the Busemann value is constant"
        )
    cyl_mass = Fraction(1, q) * Fraction(1, q - 1) ** (len(w) - 1)
    # Cancellation in g*v consumes at most |g| letters of v, so at this depth
    # the first |w| letters of g.xi are the same for every xi in [v].
    depth = len(g) + len(w)
    hits = sum(1 for v in spec.sphere(depth) if spec.mul(g, v).startswith(w))
    push_mass = hits * Fraction(1, q) * Fraction(1, q - 1) ** (depth - 1)
    h_g = len(g) - 2 * common_prefix_len(g, w)
    predicted = Fraction(q - 1) ** (-h_g)
    return QCReport(
        g=spec.format(g),
        cylinder=spec.format(w),
        cylinder_mass=cyl_mass,
        pushforward_mass=push_mass,
        busemann_at_g=h_g,
        predicted_factor=predicted,
    )


def qc_random_suite(
    rank: int, pairs: int, max_g: int, seed: int = 0
) -> list[QCReport]:
    """Random (g, cylinder) pairs with |g| <= max_g, cylinders long enough to decide."""
    spec = free_group(rank)
    rng = random.Random(seed)
    pool_g = spec.ball(max_g)
    reports = []
    while len(reports) < pairs:
        g = rng.choice(pool_g)
        wlen = rng.randint(max(1, len(g)), len(g) + 2)
        w = rng.choice(spec.sphere(wlen))
        reports.append(quasiconformal_check_tree(rank, spec.format(g), spec.format(w), spec))
    return reports


# --------------------------------------------------------- generation growth


@dataclass
class GenerationReport:
    rows: list[dict]
    start_block: str
    bound_constant: float

    @property
    def ok(self) -> bool:
        return all(r["direct"] == r["matrix"] for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "start_block": self.start_block,
            "bound_constant": self.bound_constant,
            "ok": self.ok,
        }


def generation_growth_check(
    spec: GroupSpec,
    ray: Ray,
    n_max: int,
    H: int,
    W: int,
    graph: BlockGraph,
    rate: float | None = None,
) -> GenerationReport:
    """|Gen_n(h, {e})| by forward search versus the matrix count ||M^n v||_1.

    Gen_{k+1} consists of the neighbors g s whose parent step returns to a
    member of Gen_k, which keeps the whole search inside B(e, n_max + 1).
    """
    h = busemann_patch(ray, n_max + 2)
    start = block_of(h, H, W)
    v = [1 if i == graph.index_of(start) else 0 for i in range(len(graph.vertices))]
    rows_m = graph.adjacency().to_rows()
    if rate is None:
        rate = growth_data(spec, min(n_max + 2, 10)).rate_estimate

    gen = [""]
    rows: list[dict] = []
    bound = 1.0
    mv = v
    for n in range(n_max + 1):
        direct = len(gen)
        matrix = sum(mv)
        expected = math.exp(rate * n)
        ratio = max(direct / expected, expected / direct)
        bound = max(bound, ratio)
        rows.append({"n": n, "direct": direct, "matrix": matrix, "rate_ratio": ratio})
        if n == n_max:
            break
        nxt = set()
        for g in gen:
            for c in spec.chars:
                cand = spec.mul(g, c)
                if len(cand) > n_max:
                    continue
                if cand not in nxt and parent_at(h, cand) == g:
                    nxt.add(cand)
        gen = sorted(nxt)
        mv = mat_vec(rows_m, mv)
    return GenerationReport(rows=rows, start_block=start.key(), bound_constant=bound)


# --------------------------------------------------------- mass transport


@dataclass
class MtpReport:
    n: int
    sphere_size: int
    parent_sphere_size: int
    preimage_total: int
    per_block_ok: bool
    edges_ok: bool
    matrix_ok: bool
    block_counts_n: dict
    block_counts_parent: dict

    @property
    def ok(self) -> bool:
        return (
            self.preimage_total == self.sphere_size
            and self.per_block_ok
            and self.edges_ok
            and self.matrix_ok
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sphere_size": self.sphere_size,
            "parent_sphere_size": self.parent_sphere_size,
            "preimage_total": self.preimage_total,
            "per_block_ok": self.per_block_ok,
            "edges_ok": self.edges_ok,
            "matrix_ok": self.matrix_ok,
            "block_counts_n": self.block_counts_n,
            "block_counts_parent": self.block_counts_parent,
            "ok": self.ok,
        }


def mtp_check(spec: GroupSpec, n: int, graph: BlockGraph) -> MtpReport:
    """Finite mass-transport identity on the support of the sphere measure.

    The parent map sends each translated sphere function to one over the
    previous sphere; summing preimage counts recovers |S(e, n)| exactly, the
    per-block refinement is consistent, every (parent block, block) pair is an
    edge of the graph, and the block counts satisfy the matrix recursion
    counts_n = M counts_{n-1}.
    """
    H, W = graph.H, graph.W
    if n < H + 1:
        raise PatchTooSmall(f"need n >= H + 1 = {H + 1}")
    radius = H + W + 2

    def block_and_parent(g: Word, level: int):
        patch = sphere_patch(spec, g, level, radius)
        blk = block_of(patch, H, W)
        a = parent_at(patch, "")
        return blk, spec.mul(spec.invert(a), g)

    parent_sphere = set(spec.sphere(n - 1))
    blocks_parent: dict[Word, str] = {}
    counts_parent: dict[str, int] = {}
    for g in spec.sphere(n - 1):
        patch = sphere_patch(spec, g, n - 1, radius)
        key = block_of(patch, H, W).key()
        blocks_parent[g] = key
        counts_parent[key] = counts_parent.get(key, 0) + 1

    counts_n: dict[str, int] = {}
    preimage: dict[Word, dict[str, int]] = {}
    edges_ok = True
    total = 0
    key_to_idx = {v.key(): i for i, v in enumerate(graph.vertices)}
    for g in spec.sphere(n):
        blk, par = block_and_parent(g, n)
        key = blk.key()
        counts_n[key] = counts_n.get(key, 0) + 1
        total += 1
        if par not in parent_sphere:
            edges_ok = False
            continue
        preimage.setdefault(par, {})
        preimage[par][key] = preimage[par].get(key, 0) + 1
        pkey = blocks_parent[par]
        if (key_to_idx[pkey], key_to_idx[key]) not in graph.edges:
            edges_ok = False

    per_block = {}
    for tallies in preimage.values():
        for key, c in tallies.items():
            per_block[key] = per_block.get(key, 0) + c
    per_block_ok = per_block == counts_n

    rows_m = graph.adjacency().to_rows()
    vec_parent = [counts_parent.get(v.key(), 0) for v in graph.vertices]
    predicted = mat_vec(rows_m, vec_parent)
    vec_n = [counts_n.get(v.key(), 0) for v in graph.vertices]
    matrix_ok = predicted == vec_n

    return MtpReport(
        n=n,
        sphere_size=len(spec.sphere(n)),
        parent_sphere_size=len(spec.sphere(n - 1)),
        preimage_total=total,
        per_block_ok=per_block_ok,
        edges_ok=edges_ok,
        matrix_ok=matrix_ok,
        block_counts_n=counts_n,
        block_counts_parent=counts_parent,
    )
