"""Finite measure-preserving actions, transversals, spherical averages, and the
joint block/point empirical distributions.

Averages are computed by exact integer dynamic programming over pairs
(normal-form automaton state, permutation image of the word), so they agree
with full sphere enumeration while staying cheap at radius 12 and beyond.
The enumeration route is kept alongside in the test suite as the oracle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ActionNotTransitive, RelationViolated
from .groups import GroupSpec, Word, common_prefix_len

Perm = tuple[int, ...]


def _compose(outer: Perm, inner: Perm) -> Perm:
    """(outer after inner)(x) = outer[inner[x]]."""
    return tuple(outer[i] for i in inner)


def _parse_cycles(text: str, size: int) -> Perm:
    perm = list(range(size))
    for cyc in re.findall(r"\(([^()]*)\)", text):
        items = [int(t) for t in cyc.replace(",", " ").split()]
        for a, b in zip(items, items[1:] + items[:1]):
            perm[a] = b
    return tuple(perm)


@dataclass(frozen=True)
class FiniteAction:
    """Permutation action of the group on {0..size-1}, one permutation per generator."""

    spec: GroupSpec
    size: int
    perms: Mapping[str, Perm]  # keyed by internal generator char

    def __post_init__(self):
        m = self.size
        ident = tuple(range(m))
        for c in self.spec.chars:
            if c not in self.perms:
                raise RelationViolated(
                    f"missing permutation for generator {self.spec.format(c)!r}"
                )
            perm = self.perms[c]
            if sorted(perm) != list(range(m)):
                raise RelationViolated(
                    f"permutation for {self.spec.format(c)!r} is not a bijection of 0..{m - 1}"
                )
        for c in self.spec.chars:
            ic = self.spec.inv_char(c)
            if _compose(self.perms[c], self.perms[ic]) != ident:
                raise RelationViolated(
                    f"permutations for {self.spec.format(c)!r} and its inverse do not cancel"
                )
        for lhs, rhs in self.spec.rules:
            if self.word_perm(lhs) != self.word_perm(rhs):
                raise RelationViolated(
                    f"rule {self.spec.format(lhs)!r} -> {self.spec.format(rhs)!r} "
                    "is not respected by the action"
                )
        orbit = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for c in self.spec.chars:
                y = self.perms[c][x]
                if y not in orbit:
                    orbit.add(y)
                    frontier.append(y)
        if len(orbit) != m:
            raise ActionNotTransitive(
                f"action is not transitive: orbit of 0 has size {len(orbit)} of {m}"
            )

    def word_perm(self, word: Word) -> Perm:
        pi = tuple(range(self.size))
        for c in word:
            pi = _compose(pi, self.perms[c])
        return pi

    def apply(self, word: Word, x: int) -> int:
        for c in reversed(word):
            x = self.perms[c][x]
        return x

    @classmethod
    def from_config(cls, spec: GroupSpec, cfg: Mapping) -> "FiniteAction":
        m = int(cfg["size"])
        perms: dict[str, Perm] = {}
        for label, raw in cfg["perms"].items():
            c = spec.parse(label)
            if len(c) != 1:
                raise RelationViolated(f"perm key {label!r} is not a single generator")
            perm = _parse_cycles(raw, m) if isinstance(raw, str) else tuple(int(x) for x in raw)
            perms[c] = perm
        for c in spec.chars:
            ic = spec.inv_char(c)
            if c not in perms and ic in perms:
                inv = [0] * m
                for i, v in enumerate(perms[ic]):
                    inv[v] = i
                perms[c] = tuple(inv)
        return cls(spec=spec, size=m, perms=perms)

    def to_config_dict(self) -> dict:
        return {
            "size": self.size,
            "perms": {self.spec.format(c): list(p) for c, p in self.perms.items()},
        }


def left_translation_action(spec: GroupSpec, images: Mapping[str, Perm]) -> FiniteAction:
    """Action of the group on the subgroup generated by the images, by left translation.

    ``images`` assigns to each generator label a permutation of some base set;
    the acted-on points are the elements of the generated permutation group in
    BFS-from-identity order.
    """
    base: dict[str, Perm] = {}
    for label, perm in images.items():
        c = spec.parse(label)
        base[c] = tuple(perm)
    deg = len(next(iter(base.values())))
    for c in spec.chars:
        ic = spec.inv_char(c)
        if c not in base and ic in base:
            inv = [0] * deg
            for i, v in enumerate(base[ic]):
                inv[v] = i
            base[c] = tuple(inv)
    ident = tuple(range(deg))
    elements = [ident]
    index = {ident: 0}
    frontier = [ident]
    while frontier:
        nxt = []
        for el in frontier:
            for c in spec.chars:
                prod = _compose(base[c], el)
                if prod not in index:
                    index[prod] = len(elements)
                    elements.append(prod)
                    nxt.append(prod)
        frontier = nxt
    perms = {
        c: tuple(index[_compose(base[c], el)] for el in elements) for c in spec.chars
    }
    return FiniteAction(spec=spec, size=len(elements), perms=perms)


# ----------------------------------------------------------------- quotients


@dataclass(frozen=True)
class FiniteQuotient:
    """Multiplication table of a finite group together with generator images."""

    size: int
    table: tuple[tuple[int, ...], ...]
    images: Mapping[str, int]  # keyed by internal generator char
    identity: int

    @classmethod
    def from_config(cls, spec: GroupSpec, cfg: Mapping) -> "FiniteQuotient":
        size = int(cfg["size"])
        table = tuple(tuple(int(x) for x in row) for row in cfg["table"])
        ident = next(
            e
            for e in range(size)
            if all(table[e][x] == x and table[x][e] == x for x in range(size))
        )
        images = {}
        for label, img in cfg["images"].items():
            c = spec.parse(label)
            images[c] = int(img)
        for c in spec.chars:
            ic = spec.inv_char(c)
            if c not in images and ic in images:
                images[c] = next(
                    y for y in range(size) if table[images[ic]][y] == ident
                )
        q = cls(size=size, table=table, images=images, identity=ident)
        q.validate(spec)
        return q

    def image_of_word(self, word: Word) -> int:
        x = self.identity
        for c in word:
            x = self.table[x][self.images[c]]
        return x

    def validate(self, spec: GroupSpec):
        for c in spec.chars:
            if c not in self.images:
                raise RelationViolated(
                    f"missing image for generator {spec.format(c)!r}"
                )
            ic = spec.inv_char(c)
            if self.table[self.images[c]][self.images[ic]] != self.identity:
                raise RelationViolated(
                    f"images of {spec.format(c)!r} and its inverse do not cancel"
                )
        for lhs, rhs in spec.rules:
            if self.image_of_word(lhs) != self.image_of_word(rhs):
                raise RelationViolated(
                    f"rule {spec.format(lhs)!r} -> {spec.format(rhs)!r} maps to "
                    "different quotient elements"
                )


PARITY_QUOTIENT = {"size": 2, "table": [[0, 1], [1, 0]]}


def parity_quotient_config(spec: GroupSpec) -> dict:
    """The all-generators-to-1 map onto Z/2 (the documented default for free groups)."""
    cfg = dict(PARITY_QUOTIENT)
    cfg["images"] = {label: 1 for label in spec.generators.symbols}
    return cfg


@dataclass(frozen=True)
class Transversal:
    """Shortlex-least coset representatives for the kernel of a finite quotient map."""

    quotient: FiniteQuotient
    reps: tuple[Word, ...]  # reps[i] maps to quotient element i

    def __len__(self):
        return len(self.reps)


def make_transversal(spec: GroupSpec, quotient: FiniteQuotient | Mapping) -> Transversal:
    if not isinstance(quotient, FiniteQuotient):
        quotient = FiniteQuotient.from_config(spec, quotient)
    reps: dict[int, Word] = {}
    for radius in range(quotient.size + 2):
        for w in spec.sphere(radius):
            img = quotient.image_of_word(w)
            if img not in reps:
                reps[img] = w
                if len(reps) == quotient.size:
                    return Transversal(
                        quotient=quotient,
                        reps=tuple(reps[i] for i in range(quotient.size)),
                    )
    raise RelationViolated("generator images do not generate the quotient group")


# ------------------------------------------------------------------ averages


def _norm_state(spec: GroupSpec, word: Word) -> str:
    return word[-spec._suffix_len :] if spec._suffix_len else ""


def sphere_permutation_counts(
    spec: GroupSpec, action: FiniteAction, n_max: int
) -> Iterator[dict[Perm, int]]:
    """Yield, for n = 0..n_max, the exact counts {pi: #{g in S(e,n) acting by pi}}."""
    ident = tuple(range(action.size))
    states: dict[tuple[str, Perm], int] = {("", ident): 1}
    for n in range(n_max + 1):
        marg: dict[Perm, int] = {}
        for (_, pi), cnt in states.items():
            marg[pi] = marg.get(pi, 0) + cnt
        yield marg
        if n == n_max:
            break
        nxt: dict[tuple[str, Perm], int] = {}
        for (st, pi), cnt in states.items():
            for c in spec.chars:
                t = spec.transition(st, c)
                if t is None:
                    continue
                key = (t, _compose(pi, action.perms[c]))
                nxt[key] = nxt.get(key, 0) + cnt
        states = nxt


def _resolve_reps(K) -> tuple[Word, ...]:
    if isinstance(K, Transversal):
        return K.reps
    return tuple(K)


def spherical_average(
    spec: GroupSpec,
    action: FiniteAction,
    f: Sequence,
    x: int,
    n: int,
    K,
) -> Fraction | float:
    """(1/(|K| |S(e,n)|)) sum over g in S(e,n), k in K of f(g k x).

    Exact (Fraction) whenever f has integral or rational values.
    """
    reps = _resolve_reps(K)
    counts = None
    for _, counts in zip(range(n + 1), sphere_permutation_counts(spec, action, n)):
        pass
    return _average_from_counts(action, counts, f, x, reps)


def _average_from_counts(action, counts, f, x, reps) -> Fraction | float:
    ys = [action.apply(k, x) for k in reps]
    total = sum(counts.values()) * len(reps)
    acc = 0
    for pi, cnt in counts.items():
        acc += cnt * sum(f[pi[y]] for y in ys)
    if all(isinstance(v, (int, Fraction)) for v in f):
        return Fraction(acc, total)
    return acc / total


def ball_average(
    spec: GroupSpec, action: FiniteAction, f: Sequence, x: int, n: int, K
) -> Fraction | float:
    """Same average over the ball B(e, n) instead of the sphere."""
    reps = _resolve_reps(K)
    ys = [action.apply(k, x) for k in reps]
    acc = 0
    total = 0
    for counts in sphere_permutation_counts(spec, action, n):
        total += sum(counts.values()) * len(reps)
        for pi, cnt in counts.items():
            acc += cnt * sum(f[pi[y]] for y in ys)
    if all(isinstance(v, (int, Fraction)) for v in f):
        return Fraction(acc, total)
    return acc / total


def convergence_experiment(
    spec: GroupSpec,
    action: FiniteAction,
    f: Sequence,
    x: int,
    K,
    n_range: Iterable[int],
) -> list[dict]:
    """Rows (n, average, |average - mean f|) for n in n_range (mu is uniform)."""
    reps = _resolve_reps(K)
    ns = sorted(set(n_range))
    mean = Fraction(sum(f), action.size) if all(
        isinstance(v, (int, Fraction)) for v in f
    ) else sum(f) / action.size
    rows = []
    gen = sphere_permutation_counts(spec, action, ns[-1])
    for n, counts in enumerate(gen):
        if n not in ns:
            continue
        avg = _average_from_counts(action, counts, f, x, reps)
        rows.append(
            {
                "n": n,
                "average": avg,
                "deviation": abs(avg - mean),
            }
        )
    return rows


# ------------------------------------------------------------ joint structure


@dataclass
class JointReport:
    """Empirical joint law of (window pattern of g.h_n, g k x) and its product defect."""

    n: int
    window: int
    tv_distance: Fraction | float
    pattern_marginal: dict
    x_marginal: list
    joint: dict

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "window": self.window,
            "tv_distance": float(self.tv_distance),
            "tv_exact": str(self.tv_distance),
            "pattern_marginal": {k: str(v) for k, v in self.pattern_marginal.items()},
            "x_marginal": [str(v) for v in self.x_marginal],
        }


def _pattern_table(spec: GroupSpec, R: int, P: int) -> dict[Word, tuple[int, ...]]:
    """Window values d(f, g) - n for f in B(e, R), determined by the head g[:P].

    Valid for free groups: d(f, g) = |f| + |g| - 2 * (common prefix length),
    and with P >= R the common prefix with any |f| <= R is decided by the head.
    """
    ball = spec.ball(R)
    table = {}
    for head in spec.ball(P):
        if len(head) < P:
            continue
        table[head] = tuple(
            len(f) - 2 * common_prefix_len(f, head) for f in ball
        )
    return table


def joint_empirical(
    spec: GroupSpec,
    action: FiniteAction,
    x: int,
    K,
    n: int,
    window: int,
    use_dp: bool | None = None,
) -> JointReport:
    """Joint empirical distribution over g in S(e,n), k in K of
    (values of g.h_n on B(e, window), g k x), with its total-variation distance
    from (pattern marginal) x (uniform on X).

    Free groups run an exact head DP; other families enumerate the sphere.
    """
    reps = _resolve_reps(K)
    ys = [action.apply(k, x) for k in reps]
    m = action.size
    if use_dp is None:
        use_dp = spec.family == "free"
    joint: dict[tuple[tuple[int, ...], int], int] = {}
    if use_dp:
        P = window
        if n < P:
            raise ValueError(f"need n >= window ({P})")
        table = _pattern_table(spec, window, P)
        ident = tuple(range(m))
        # state: (head, automaton state, permutation)
        states: dict[tuple[Word, str, Perm], int] = {("", "", ident): 1}
        for _ in range(n):
            nxt: dict[tuple[Word, str, Perm], int] = {}
            for (head, st, pi), cnt in states.items():
                for c in spec.chars:
                    t = spec.transition(st, c)
                    if t is None:
                        continue
                    nh = head + c if len(head) < P else head
                    key = (nh, t, _compose(pi, action.perms[c]))
                    nxt[key] = nxt.get(key, 0) + cnt
            states = nxt
        for (head, _, pi), cnt in states.items():
            pattern = table[head]
            for y in ys:
                k2 = (pattern, pi[y])
                joint[k2] = joint.get(k2, 0) + cnt
        sphere_size = sum(states.values())
    else:
        sphere = spec.sphere(n)
        ball = spec.ball(window)
        for g in sphere:
            inv_g = spec.invert(g)
            pattern = tuple(len(spec.mul(inv_g, f)) - n for f in ball)
            for y in ys:
                k2 = (pattern, action.apply(g, y))
                joint[k2] = joint.get(k2, 0) + 1
        sphere_size = len(sphere)
    total = sphere_size * len(reps)

    pattern_marg: dict[tuple[int, ...], Fraction] = {}
    x_marg = [Fraction(0)] * m
    jprob: dict[tuple[tuple[int, ...], int], Fraction] = {}
    for (pattern, y), cnt in joint.items():
        pr = Fraction(cnt, total)
        jprob[(pattern, y)] = pr
        pattern_marg[pattern] = pattern_marg.get(pattern, Fraction(0)) + pr
        x_marg[y] += pr
    tv = Fraction(0)
    for pattern, pm in pattern_marg.items():
        for y in range(m):
            tv += abs(jprob.get((pattern, y), Fraction(0)) - pm * Fraction(1, m))
    tv = tv / 2
    return JointReport(
        n=n,
        window=window,
        tv_distance=tv,
        pattern_marginal={str(k): v for k, v in pattern_marg.items()},
        x_marginal=x_marg,
        joint={(str(k[0]), k[1]): v for k, v in jprob.items()},
    )
