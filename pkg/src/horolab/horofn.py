"""Finite-window horofunction representations, the parent map, and block extraction.

A patch stores integer values of a horofunction on the ball B(e, radius).
Busemann patches are built from geodesic ray prefixes; values are evaluated at
two ray truncations and must agree, which certifies stabilization.  Values are
computed lazily and cached, so deep parent chains stay cheap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import (
    NotStabilized,
    PatchBoundary,
    PatchTooSmall,
    RayNotGeodesic,
)
from .groups import GroupSpec, Word


@dataclass(frozen=True)
class Ray:
    """A geodesic ray prefix: a normal-form word, every prefix of which is geodesic."""

    spec: GroupSpec
    word: Word

    def __post_init__(self):
        if self.spec.normalize(self.word) != self.word:
            raise RayNotGeodesic(
                f"ray word {self.spec.format(self.word)!r} is not a normal form"
            )

    def __len__(self) -> int:
        return len(self.word)

    def prefix(self, t: int) -> Word:
        return self.word[:t]


def ray_from_text(spec: GroupSpec, text: str) -> Ray:
    return Ray(spec, spec.parse(text))


def periodic_ray(spec: GroupSpec, pattern_text: str, length: int) -> Ray:
    pat = spec.parse(pattern_text)
    word = (pat * (length // len(pat) + 1))[:length]
    return Ray(spec, word)


def sample_rays(
    spec: GroupSpec, count: int, length: int, rng: random.Random | int
) -> list[Ray]:
    """Sample ``count`` distinct rays of the given length via automaton walks."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    seen: set[Word] = set()
    rays: list[Ray] = []
    attempts = 0
    while len(rays) < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise RayNotGeodesic(
                f"could not sample {count} distinct rays of length {length}"
            )
        w = ""
        ok = True
        for _ in range(length):
            letters = spec.allowed_letters(w)
            if not letters:
                ok = False
                break
            w += rng.choice(letters)
        if ok and w not in seen:
            seen.add(w)
            rays.append(Ray(spec, w))
    return rays


class HorofunctionPatch:
    """Integer values of a horofunction on B(e, radius), evaluated lazily."""

    __slots__ = ("spec", "radius", "stabilized", "_fn", "_cache", "base_value")

    def __init__(
        self,
        spec: GroupSpec,
        radius: int,
        fn: Callable[[Word], int],
        stabilized: bool,
    ):
        self.spec = spec
        self.radius = radius
        self.stabilized = stabilized
        self._fn = fn
        self._cache: dict[Word, int] = {}
        self.base_value = self.value("")

    def value(self, g: Word) -> int:
        """h(g) for a normal-form word g with |g| <= radius."""
        v = self._cache.get(g)
        if v is None:
            if len(g) > self.radius:
                raise PatchBoundary(
                    f"|g| = {len(g)} exceeds patch radius {self.radius}"
                )
            v = self._fn(g)
            self._cache[g] = v
        return v

    def materialize(self, radius: int | None = None) -> dict[Word, int]:
        """Values on the full ball B(e, radius) as a plain dict."""
        r = self.radius if radius is None else radius
        if r > self.radius:
            raise PatchBoundary(f"requested radius {r} exceeds patch radius {self.radius}")
        return {g: self.value(g) for g in self.spec.ball(r)}

    def restricted_equal(self, other: "HorofunctionPatch", radius: int) -> bool:
        return self.materialize(radius) == other.materialize(radius)

    def to_json_dict(self, radius: int | None = None) -> dict:
        r = self.radius if radius is None else radius
        return {
            "radius": r,
            "base_value": self.base_value,
            "entries": [
                [self.spec.format(g), self.value(g)] for g in self.spec.ball(r)
            ],
        }

    def __repr__(self) -> str:
        return f"HorofunctionPatch(radius={self.radius}, base={self.base_value})"


def busemann_patch(ray: Ray, radius: int, margin: int | None = None) -> HorofunctionPatch:
    """Patch of the Busemann function along ``ray``: h(g) = d(g, r(t)) - t.

    Every value is evaluated at two truncations t1 < t2 of the ray and the two
    results must agree; a disagreement raises NotStabilized.  The required ray
    length is radius + 16*delta + margin with margin defaulting to 2*delta + 2.
    """
    spec = ray.spec
    if margin is None:
        margin = 2 * spec.delta + 2
    need = radius + 16 * spec.delta + margin
    if len(ray) < need:
        raise NotStabilized(
            f"ray length {len(ray)} < {need} required for radius {radius} "
            f"(16*delta + margin = {16 * spec.delta + margin})"
        )
    t2 = len(ray)
    t1 = t2 - margin
    inv_p1 = spec.invert(ray.prefix(t1))
    inv_p2 = spec.invert(ray.prefix(t2))
    mul = spec.mul

    def fn(g: Word) -> int:
        v2 = len(mul(inv_p2, g)) - t2
        v1 = len(mul(inv_p1, g)) - t1
        if v1 != v2:
            raise NotStabilized(
                f"value at {spec.format(g)!r} differs between truncations "
                f"{t1} and {t2}: {v1} vs {v2}"
            )
        return v2

    return HorofunctionPatch(spec, radius, fn, stabilized=True)


def sphere_patch(spec: GroupSpec, g: Word, n: int, radius: int) -> HorofunctionPatch:
    """Patch of the translate g.h_n near e: f -> d(f, g) - n, for g in S(e, n)."""
    inv_g = spec.invert(g)
    mul = spec.mul

    def fn(f: Word) -> int:
        return len(mul(inv_g, f)) - n

    return HorofunctionPatch(spec, radius, fn, stabilized=True)


def shifted_patch(h: HorofunctionPatch, constant: int) -> HorofunctionPatch:
    """h + constant on the same window (used to test additive invariance)."""
    return HorofunctionPatch(
        h.spec, h.radius, lambda g: h.value(g) + constant, stabilized=h.stabilized
    )


# ------------------------------------------------------------------ parent map


def parent_letter(h: HorofunctionPatch, g: Word) -> str:
    """The order-least generator a with h(g a) = h(g) - 1."""
    if len(g) > h.radius - 1:
        raise PatchBoundary(
            f"parent step at |g| = {len(g)} needs radius > {h.radius}"
        )
    spec = h.spec
    target = h.value(g) - 1
    for c in spec.chars:
        if h.value(spec.mul(g, c)) == target:
            return c
    raise PatchBoundary(
        f"no decreasing generator at {spec.format(g)!r}: patch is not "
        "distance-like there (value floor reached?)"
    )


def parent_at(h: HorofunctionPatch, g: Word) -> Word:
    """Par_h(g) = g a for the order-least generator a with h(g a) = h(g) - 1."""
    return h.spec.mul(g, parent_letter(h, g))


def parent_horofunction(h: HorofunctionPatch) -> HorofunctionPatch:
    """Par(h): the patch recentered at Par_h(e), radius one smaller."""
    if h.radius < 2:
        raise PatchBoundary("parent recentering needs radius >= 2")
    p = parent_at(h, "")
    spec = h.spec
    return HorofunctionPatch(
        spec, h.radius - 1, lambda g: h.value(spec.mul(p, g)), stabilized=h.stabilized
    )


def child_patch(h: HorofunctionPatch, c: str) -> HorofunctionPatch:
    """The translate c.h (candidate child): (c.h)(g) = h(c^-1 g)."""
    spec = h.spec
    ic = spec.inv_char(c)
    return HorofunctionPatch(
        spec, h.radius - 1, lambda g: h.value(spec.mul(ic, g)), stabilized=h.stabilized
    )


# ---------------------------------------------------------------------- blocks


@dataclass(frozen=True)
class Block:
    """The window of a horofunction around its parent chain, up to a constant.

    ``members`` holds (relative word, value offset) pairs sorted shortlex then
    by offset, so equality of blocks is equality of the canonical tuples and
    ``key()`` is a bit-exact serialization usable as a lookup key.
    """

    members: tuple[tuple[Word, int], ...]
    window: tuple[int, int]  # (H, W)

    def key(self) -> str:
        return "|".join(f"{w}:{v}" for w, v in self.members)

    def sort_key(self) -> tuple[int, str]:
        k = self.key()
        return (len(k), k)

    def parent_char(self) -> str:
        """The generator labelling the parent transition (least length-1 member at offset -1)."""
        for w, v in self.members:
            if len(w) == 1 and v == -1:
                return w
        raise ValueError("block has no length-1 member at offset -1")

    def format(self, spec: GroupSpec) -> list[list]:
        return [[spec.format(w), v] for w, v in self.members]


def make_block(members: Iterable[tuple[Word, int]], h_w: tuple[int, int]) -> Block:
    ordered = tuple(sorted(set(members), key=lambda m: (len(m[0]), m[0], m[1])))
    return Block(ordered, h_w)


def block_of(h: HorofunctionPatch, H: int, W: int) -> Block:
    """Members {(g, h(g)-h(e)) : some chain point Par^n(e), n <= H, has d <= W and equal value}."""
    if h.radius < H + W + 1:
        raise PatchTooSmall(
            f"block window (H={H}, W={W}) needs radius >= {H + W + 1}, have {h.radius}"
        )
    spec = h.spec
    base = h.value("")
    chain = [""]
    for _ in range(H):
        chain.append(parent_at(h, chain[-1]))
    members: dict[Word, int] = {}
    ball_w = spec.ball(W)
    for i, c in enumerate(chain):
        vc = base - i
        for u in ball_w:
            g = spec.mul(c, u)
            if g not in members and h.value(g) == vc:
                members[g] = -i
    return make_block(members.items(), (H, W))


def is_child_letter(h: HorofunctionPatch, c: str) -> bool:
    """True iff c.h is a child of h, i.e. Par(c.h) = h with parent letter c."""
    child = child_patch(h, c)
    try:
        return parent_letter(child, "") == c
    except PatchBoundary:
        return False


def child_blocks(h: HorofunctionPatch, H: int, W: int) -> list[tuple[str, Block]]:
    """(letter, block) for every valid child c.h of h, in generator order."""
    if h.radius < H + W + 2:
        raise PatchTooSmall(
            f"child blocks need radius >= {H + W + 2}, have {h.radius}"
        )
    out = []
    for c in h.spec.chars:
        child = child_patch(h, c)
        if child.value("") != h.base_value + 1:
            continue
        if parent_letter(child, "") == c:
            out.append((c, block_of(child, H, W)))
    return out


# ------------------------------------------------------ determinism property


@dataclass
class DeterminismReport:
    """Result of the sampled block-determinism test."""

    H: int
    W: int
    pairs: int
    depth: int
    comparisons: int
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "W": self.W,
            "pairs": self.pairs,
            "depth": self.depth,
            "comparisons": self.comparisons,
            "violations": self.violations,
            "ok": self.ok,
        }


def required_ray_length(spec: GroupSpec, radius: int, margin: int | None = None) -> int:
    if margin is None:
        margin = 2 * spec.delta + 2
    return radius + 16 * spec.delta + margin


def _chain_data(ray: Ray, depth: int, H: int, W: int):
    """Blocks and child-block multisets along the parent chain of a ray patch."""
    h = busemann_patch(ray, depth + H + W + 2)
    rows = []
    cur = h
    for _ in range(depth + 1):
        blk = block_of(cur, H, W)
        kids = tuple(sorted(b.key() for _, b in child_blocks(cur, H, W)))
        rows.append((blk.key(), kids))
        cur = parent_horofunction(cur)
    return rows


def determinism_test(
    spec: GroupSpec,
    H: int,
    W: int,
    pairs: int,
    depth: int,
    rng_seed: int = 0,
) -> DeterminismReport:
    """Sampled check that a block determines the child-block multiset.

    Draws ``pairs`` ray pairs; whenever the two patches carry equal blocks at
    the same chain level (their base values agree by construction), their
    child-block multisets must be equal.  Any mismatch is a violation and the
    caller should raise (H, W).
    """
    length = required_ray_length(spec, depth + H + W + 2) + 1
    rays = sample_rays(spec, 2 * pairs, length, random.Random(rng_seed))
    comparisons = 0
    violations: list[dict] = []
    for k in range(pairs):
        r1, r2 = rays[2 * k], rays[2 * k + 1]
        rows1 = _chain_data(r1, depth, H, W)
        rows2 = _chain_data(r2, depth, H, W)
        for n, ((b1, kids1), (b2, kids2)) in enumerate(zip(rows1, rows2)):
            if b1 != b2:
                continue
            comparisons += 1
            if kids1 != kids2:
                violations.append(
                    {
                        "ray1": spec.format(r1.word),
                        "ray2": spec.format(r2.word),
                        "level": n,
                        "block": b1,
                        "children1": kids1,
                        "children2": kids2,
                    }
                )
    return DeterminismReport(H, W, pairs, depth, comparisons, violations)


DEFAULT_WINDOW_SCHEDULE = ((1, 0), (2, 0), (2, 1), (3, 1), (3, 2), (4, 2), (5, 3))


def adaptive_block_parameters(
    spec: GroupSpec,
    pairs: int,
    depth: int,
    rng_seed: int = 0,
    schedule: Sequence[tuple[int, int]] = DEFAULT_WINDOW_SCHEDULE,
) -> tuple[int, int, list[DeterminismReport]]:
    """Grow (H, W) along ``schedule`` until the determinism test passes."""
    trail = []
    for H, W in schedule:
        report = determinism_test(spec, H, W, pairs, depth, rng_seed)
        trail.append(report)
        if report.ok:
            return H, W, trail
    raise PatchTooSmall(
        f"determinism test failed for every window in {list(schedule)}; "
        "raise (H, W) beyond the schedule"
    )
