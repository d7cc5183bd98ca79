"""Word arithmetic, word metric, and sphere enumeration for the supported group families.

Group elements are geodesic normal forms encoded as strings over an internal
one-character-per-generator alphabet.  The generator order (list position in
the :class:`GeneratorSet`) doubles as the total order on the generating set,
so plain string comparison of equal-length words is the shortlex order used
everywhere downstream.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import GeodesicMismatch, RadiusCapExceeded, UnknownSymbol

Word = str  # normal-form word over the internal alphabet

_BYTES_PER_ELEMENT = 120  # rough per-string memory estimate used in cap messages


def _internal_char(i: int) -> str:
    # ord() must be monotone in the generator index so that string comparison
    # of equal-length words is shortlex.
    if i < 26:
        return chr(ord("a") + i)
    if i < 90:
        return chr(192 + (i - 26))
    raise ValueError("at most 90 generators are supported")


def common_prefix_len(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


@dataclass(frozen=True)
class GeneratorSet:
    """Ordered symmetric generating set with an explicit inverse pairing."""

    symbols: tuple[str, ...]
    inverse: tuple[int, ...]

    def __post_init__(self):
        n = len(self.symbols)
        if n == 0:
            raise ValueError("generating set must be nonempty")
        if len(set(self.symbols)) != n:
            raise ValueError("generator labels must be distinct")
        if sorted(self.inverse) != list(range(n)):
            raise ValueError("inverse pairing must be a permutation of the symbols")
        for i, j in enumerate(self.inverse):
            if self.inverse[j] != i:
                raise ValueError("inverse pairing must be an involution")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class SphereIndex:
    """Materialized spheres S(e, 0..radius_max) in shortlex order."""

    radius_max: int
    spheres: tuple[tuple[Word, ...], ...]

    def sphere(self, n: int) -> tuple[Word, ...]:
        return self.spheres[n]

    def ball(self, n: int) -> list[Word]:
        return [w for sph in self.spheres[: n + 1] for w in sph]


@dataclass
class GeodesicValidation:
    """Outcome of the BFS/confluence cross-check of a rewriting system."""

    radius: int
    inverse_failures: list[tuple[str, str]] = field(default_factory=list)
    confluence_failures: list[tuple[str, str, str]] = field(default_factory=list)
    metric_violations: list[tuple[str, int, int]] = field(default_factory=list)
    sphere_mismatches: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.inverse_failures
            or self.confluence_failures
            or self.metric_violations
            or self.sphere_mismatches
        )

    def summary(self) -> str:
        if self.ok:
            return f"geodesic validation passed to radius {self.radius}"
        parts = []
        if self.inverse_failures:
            parts.append(f"inverse cancellation fails: {self.inverse_failures[:3]}")
        if self.confluence_failures:
            parts.append(f"critical pairs diverge: {self.confluence_failures[:3]}")
        if self.metric_violations:
            parts.append(f"normal-form length != BFS distance: {self.metric_violations[:3]}")
        if self.sphere_mismatches:
            parts.append(f"sphere counts disagree: {self.sphere_mismatches[:3]}")
        return "; ".join(parts)

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "ok": self.ok,
            "inverse_failures": self.inverse_failures,
            "confluence_failures": self.confluence_failures,
            "metric_violations": self.metric_violations,
            "sphere_mismatches": self.sphere_mismatches,
        }


@dataclass
class RipsReport:
    """Spot-check of delta-thinness on sampled geodesic triangles."""

    delta: int
    radius: int
    samples: int
    max_defect: int

    @property
    def ok(self) -> bool:
        return self.max_defect <= self.delta

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "radius": self.radius,
            "samples": self.samples,
            "max_defect": self.max_defect,
            "ok": self.ok,
        }


class GroupSpec:
    """A group given by a length-reducing confluent rewriting system.

    Built-in families: free groups (``free_group``) and free products of
    finite cyclic groups (``free_product_of_cyclics``).  User-supplied rule
    systems are accepted through :meth:`from_config` and are rejected unless
    they pass :meth:`validate_geodesics`.
    """

    def __init__(
        self,
        generators: GeneratorSet,
        rules: Sequence[tuple[str, str]],
        family: str,
        delta: int,
        sphere_cap: int = 20_000_000,
    ):
        if delta < 1:
            raise ValueError("delta must be a positive integer")
        self.generators = generators
        self.family = family
        self.delta = int(delta)
        self.sphere_cap = int(sphere_cap)

        n = len(generators)
        self.chars = "".join(_internal_char(i) for i in range(n))
        self._char_of_label = {lab: self.chars[i] for i, lab in enumerate(generators.symbols)}
        self._label_of_char = {self.chars[i]: lab for i, lab in enumerate(generators.symbols)}
        self._inv_char = {
            self.chars[i]: self.chars[generators.inverse[i]] for i in range(n)
        }
        self._single_char_labels = all(len(lab) == 1 for lab in generators.symbols)

        self.rules: tuple[tuple[Word, Word], ...] = tuple(
            (self.parse(l), self.parse(r)) for l, r in rules
        )
        for l, r in self.rules:
            if len(l) <= len(r):
                raise ValueError(f"rule {l!r} -> {r!r} is not length-reducing")
        self._lmax = max((len(l) for l, _ in self.rules), default=1)
        self._suffix_len = max(self._lmax - 1, 0)
        self._lhs_set = {l for l, _ in self.rules}
        by_last: dict[str, list[tuple[Word, Word]]] = {}
        for l, r in self.rules:
            by_last.setdefault(l[-1], []).append((l, r))
        self._rules_by_last = by_last

        self._spheres: list[list[Word]] = [[""]]
        self._sphere_total = 1
        self._state_counts: list[dict[str, int]] = [{"": 1}]
        self._trans: dict[tuple[str, str], str | None] = {}

    # ---------------------------------------------------------------- words

    def parse(self, text: str | Iterable[str]) -> Word:
        """Convert label text (space-separated, or compact single chars) to a word."""
        if isinstance(text, str):
            if text == "":
                return ""
            if " " in text:
                tokens = text.split()
            elif self._single_char_labels:
                tokens = list(text)
            else:
                tokens = [text]
        else:
            tokens = list(text)
        out = []
        for tok in tokens:
            try:
                out.append(self._char_of_label[tok])
            except KeyError:
                raise UnknownSymbol(f"symbol {tok!r} is not a generator") from None
        return "".join(out)

    def format(self, word: Word) -> str:
        """Render an internal word back as generator labels."""
        labels = [self._label_of_char[c] for c in word]
        sep = "" if self._single_char_labels else " "
        return sep.join(labels)

    def labels(self, word: Word) -> list[str]:
        return [self._label_of_char[c] for c in word]

    def _reduce(self, base: Word, tail: str) -> Word:
        """Append ``tail`` to the normal word ``base`` and rewrite to the fixpoint.

        Characters are pushed one at a time; every replacement re-feeds its
        right-hand side so that redexes created inside the replaced region are
        caught.  Termination follows from the rules being length-reducing.
        """
        s = base
        by_last = self._rules_by_last
        pending = list(reversed(tail))
        while pending:
            s += pending.pop()
            cands = by_last.get(s[-1])
            if not cands:
                continue
            for l, r in cands:
                if s.endswith(l):
                    # The truncated word is a prefix of a redex-free word, so
                    # only the re-fed right-hand side needs further checks.
                    s = s[: len(s) - len(l)]
                    if r:
                        pending.extend(reversed(r))
                    break
        return s

    def normalize(self, word: str) -> Word:
        """Rewrite ``word`` (internal chars) to its unique normal form."""
        for c in word:
            if c not in self._label_of_char:
                raise UnknownSymbol(f"char {c!r} is not in the internal alphabet")
        return self._reduce("", word)

    def mul(self, x: Word, y: Word) -> Word:
        """Product of two normal forms (normal form of the concatenation)."""
        return self._reduce(x, y)

    def invert(self, x: Word) -> Word:
        return self._reduce("", "".join(self._inv_char[c] for c in reversed(x)))

    def inv_char(self, c: str) -> str:
        return self._inv_char[c]

    def dist(self, x: Word, y: Word) -> int:
        """Word-metric distance between two elements (inputs are normalized)."""
        x = self._reduce("", x)
        y = self._reduce("", y)
        return len(self.mul(self.invert(x), y))

    def gromov_product(self, y: Word, z: Word, base: Word = "") -> Fraction:
        return Fraction(
            self.dist(base, y) + self.dist(base, z) - self.dist(y, z), 2
        )

    def geodesic_vertices(self, x: Word, y: Word) -> list[Word]:
        """Vertices of the geodesic from x to y spelled by the normal form of x^-1 y."""
        w = self.mul(self.invert(x), y)
        out = [x]
        cur = x
        for c in w:
            cur = self.mul(cur, c)
            out.append(cur)
        return out

    # ----------------------------------------------------- normal-form automaton

    def transition(self, state: str, c: str) -> str | None:
        """Suffix-automaton step: next state if appending ``c`` stays normal, else None."""
        key = (state, c)
        cached = self._trans.get(key, "?")
        if cached != "?":
            return cached
        s = state + c
        blocked = False
        for k in range(1, min(len(s), self._lmax) + 1):
            if s[-k:] in self._lhs_set:
                blocked = True
                break
        nxt = None if blocked else s[-self._suffix_len :] if self._suffix_len else ""
        self._trans[key] = nxt
        return nxt

    def allowed_letters(self, word: Word) -> list[str]:
        state = word[-self._suffix_len :] if self._suffix_len else ""
        return [c for c in self.chars if self.transition(state, c) is not None]

    # ----------------------------------------------------------------- spheres

    def _grow_spheres(self, n: int):
        while len(self._spheres) <= n:
            level = self._spheres[-1]
            nxt: list[Word] = []
            suffix = self._suffix_len
            for w in level:
                state = w[-suffix:] if suffix else ""
                for c in self.chars:
                    if self.transition(state, c) is not None:
                        nxt.append(w + c)
            self._sphere_total += len(nxt)
            if self._sphere_total > self.sphere_cap:
                est_mb = self._sphere_total * _BYTES_PER_ELEMENT / 1e6
                raise RadiusCapExceeded(
                    f"sphere radius {len(self._spheres)} needs ~{self._sphere_total} "
                    f"elements (~{est_mb:.0f} MB), above cap {self.sphere_cap}"
                )
            self._spheres.append(nxt)

    def sphere(self, n: int) -> list[Word]:
        """S(e, n) in shortlex order."""
        self._grow_spheres(n)
        return self._spheres[n]

    def ball(self, n: int) -> list[Word]:
        """B(e, n) in shortlex order."""
        self._grow_spheres(n)
        return [w for sph in self._spheres[: n + 1] for w in sph]

    def sphere_index(self, radius_max: int) -> SphereIndex:
        self._grow_spheres(radius_max)
        return SphereIndex(
            radius_max=radius_max,
            spheres=tuple(tuple(s) for s in self._spheres[: radius_max + 1]),
        )

    def sphere_size(self, n: int) -> int:
        """|S(e, n)| by counting automaton paths (no materialization)."""
        while len(self._state_counts) <= n:
            cur = self._state_counts[-1]
            nxt: dict[str, int] = {}
            total = 0
            for state, count in cur.items():
                for c in self.chars:
                    t = self.transition(state, c)
                    if t is not None:
                        nxt[t] = nxt.get(t, 0) + count
                        total += count
            if total > self.sphere_cap:
                raise RadiusCapExceeded(
                    f"sphere radius {len(self._state_counts)} would hold {total} elements,"
                    f" above cap {self.sphere_cap}"
                )
            self._state_counts.append(nxt)
        return sum(self._state_counts[n].values())

    # -------------------------------------------------------------- validation

    def validate_geodesics(self, radius: int) -> GeodesicValidation:
        """Cross-check normal forms against an independent BFS of the Cayley graph.

        Checks, in order: inverse cancellation (every generator cancels its
        declared inverse), local confluence via critical pairs (with
        length-reducing rules this implies confluence), BFS graph distance ==
        normal-form length within ``radius``, and agreement of BFS level sets
        with the automaton enumeration.
        """
        report = GeodesicValidation(radius=radius)

        for c in self.chars:
            if self.mul(c, self._inv_char[c]) != "" or self.mul(self._inv_char[c], c) != "":
                report.inverse_failures.append(
                    (self._label_of_char[c], self.format(self.mul(c, self._inv_char[c])))
                )

        for (l1, r1), (l2, r2) in itertools.product(self.rules, self.rules):
            # overlap: a proper suffix of l1 equals a prefix of l2
            for k in range(1, min(len(l1), len(l2))):
                if l1[-k:] == l2[:k]:
                    w = l1 + l2[k:]
                    a = self.normalize(r1 + l2[k:])
                    b = self.normalize(l1[: len(l1) - k] + r2)
                    if a != b:
                        report.confluence_failures.append((w, a, b))
            # containment: l2 occurs strictly inside l1
            if l1 != l2:
                start = l1.find(l2)
                while start != -1:
                    a = self.normalize(r1)
                    b = self.normalize(l1[:start] + r2 + l1[start + len(l2) :])
                    if a != b:
                        report.confluence_failures.append((l1, a, b))
                    start = l1.find(l2, start + 1)

        # independent BFS over products
        dist = {"": 0}
        frontier = [""]
        level_counts = [1]
        for d in range(radius):
            nxt = []
            for w in frontier:
                for c in self.chars:
                    v = self.mul(w, c)
                    if v not in dist:
                        dist[v] = d + 1
                        nxt.append(v)
                        if len(v) != d + 1:
                            report.metric_violations.append((self.format(v), d + 1, len(v)))
            frontier = nxt
            level_counts.append(len(nxt))

        for k in range(radius + 1):
            enum = len(self.sphere(k))
            if enum != level_counts[k]:
                report.sphere_mismatches.append((k, level_counts[k], enum))
        return report

    def rips_spot_check(self, radius: int, samples: int, seed: int = 0) -> RipsReport:
        """Sample geodesic triangles and measure the worst thinness defect."""
        rng = random.Random(seed)
        pool = self.ball(radius)
        max_defect = 0
        for _ in range(samples):
            x, y, z = (rng.choice(pool) for _ in range(3))
            sides = [
                self.geodesic_vertices(x, y),
                self.geodesic_vertices(y, z),
                self.geodesic_vertices(z, x),
            ]
            for i in range(3):
                others = sides[(i + 1) % 3] + sides[(i + 2) % 3]
                for v in sides[i]:
                    defect = min(self.dist(v, u) for u in others)
                    if defect > max_defect:
                        max_defect = defect
        return RipsReport(delta=self.delta, radius=radius, samples=samples, max_defect=max_defect)

    # ------------------------------------------------------------------ config

    def to_config_dict(self) -> dict:
        gens = self.generators
        return {
            "family": self.family,
            "generators": list(gens.symbols),
            "inverses": {gens.symbols[i]: gens.symbols[j] for i, j in enumerate(gens.inverse)},
            "rules": [[self.format(l), self.format(r)] for l, r in self.rules],
            "delta": self.delta,
            "sphere_cap": self.sphere_cap,
        }

    @classmethod
    def from_config(cls, cfg: Mapping | str | Path, validate_radius: int = 6) -> "GroupSpec":
        """Build a spec from a JSON-compatible mapping (or a path to one)."""
        if isinstance(cfg, (str, Path)):
            cfg = json.loads(Path(cfg).read_text())
        family = cfg.get("family", "user-supplied").replace("_", "-")
        if family == "free":
            return free_group(int(cfg["rank"]), sphere_cap=cfg.get("sphere_cap", 20_000_000))
        if family in ("free-product-of-cyclics", "free-product-cyclics"):
            return free_product_of_cyclics(
                [int(m) for m in cfg["orders"]], sphere_cap=cfg.get("sphere_cap", 20_000_000)
            )
        if family != "user-supplied":
            raise ValueError(f"unknown family {family!r}")
        symbols = tuple(cfg["generators"])
        inv_map = dict(cfg["inverses"])
        index = {s: i for i, s in enumerate(symbols)}
        inverse = tuple(index[inv_map[s]] for s in symbols)
        spec = cls(
            GeneratorSet(symbols, inverse),
            [tuple(rule) for rule in cfg["rules"]],
            family="user-supplied",
            delta=int(cfg["delta"]),
            sphere_cap=cfg.get("sphere_cap", 20_000_000),
        )
        report = spec.validate_geodesics(validate_radius)
        if not report.ok:
            raise GeodesicMismatch(report.summary())
        return spec

    def __repr__(self) -> str:
        return f"GroupSpec({self.family}, generators={list(self.generators.symbols)})"


# ------------------------------------------------------------------- families


def free_group(rank: int, sphere_cap: int = 20_000_000) -> GroupSpec:
    """Free group F_rank with generators a, b, ... and inverses A, B, ..."""
    if not 1 <= rank <= 13:
        raise ValueError("supported ranks: 1..13")
    symbols = []
    inverse = []
    for i in range(rank):
        lo = chr(ord("a") + i)
        symbols += [lo, lo.upper()]
        inverse += [2 * i + 1, 2 * i]
    rules = []
    for i in range(rank):
        lo = chr(ord("a") + i)
        rules.append((lo + lo.upper(), ""))
        rules.append((lo.upper() + lo, ""))
    return GroupSpec(
        GeneratorSet(tuple(symbols), tuple(inverse)),
        rules,
        family="free",
        delta=1,
        sphere_cap=sphere_cap,
    )


def free_product_of_cyclics(orders: Sequence[int], sphere_cap: int = 20_000_000) -> GroupSpec:
    """Free product Z/m1 * Z/m2 * ... with one letter per factor.

    Order-2 factors contribute a single self-inverse generator; odd orders
    m >= 3 contribute a generator/inverse pair with the power-reduction rules
    t^(m//2+1) -> inverse^(m - m//2 - 1).  Even orders >= 4 are rejected:
    t^(m/2) and its inverse word are distinct geodesic spellings of the same
    element, so no strictly length-reducing system can pick a normal form.
    """
    if len(orders) < 2:
        raise ValueError("need at least two factors")
    symbols: list[str] = []
    inverse: list[int] = []
    rules: list[tuple[str, str]] = []
    extras = []
    for fi, m in enumerate(orders):
        lo = chr(ord("a") + fi)
        if m < 2:
            raise ValueError("cyclic factor orders must be >= 2")
        if m == 2:
            symbols.append(lo)
            inverse.append(len(symbols) - 1)
            rules.append((lo + " " + lo, ""))
        elif m % 2 == 1:
            up = lo.upper()
            symbols += [lo, up]
            inverse += [len(symbols) - 1, len(symbols) - 2]
            rules.append((lo + " " + up, ""))
            rules.append((up + " " + lo, ""))
            k0 = m // 2 + 1
            rules.append((" ".join([lo] * k0), " ".join([up] * (m - k0))))
            rules.append((" ".join([up] * k0), " ".join([lo] * (m - k0))))
            extras.append((m + 3) // 4)
        else:
            raise ValueError(
                f"even cyclic order {m} >= 4 is not supported: length-reducing rules "
                "cannot canonicalize the half-way power"
            )
    delta = 1 + (max(extras) if extras else 0)
    return GroupSpec(
        GeneratorSet(tuple(symbols), tuple(inverse)),
        rules,
        family="free-product-of-cyclics",
        delta=delta,
        sphere_cap=sphere_cap,
    )
