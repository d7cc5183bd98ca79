"""The block digraph, its adjacency matrix, and path codings of horofunctions.

Vertices are blocks; there is an edge B -> C when some (equivalently, by the
determinism property, any) horofunction in C has its parent in B.  Enumeration
is sampling-plus-closure: seed rays contribute their blocks, and the graph is
closed under parent and child transitions until a sweep adds nothing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import PatchTooSmall
from .groups import GroupSpec, Word
from .horofn import (
    Block,
    HorofunctionPatch,
    Ray,
    block_of,
    busemann_patch,
    child_blocks,
    child_patch,
    parent_horofunction,
    required_ray_length,
    sample_rays,
)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """0/1 matrix with entries[C][B] = 1 iff the block graph has an edge B -> C."""

    entries: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    def to_rows(self) -> list[list[int]]:
        return [list(row) for row in self.entries]


@dataclass
class BlockGraph:
    """Directed graph on blocks; vertex order is shortlex on block serializations."""

    spec: GroupSpec
    H: int
    W: int
    vertices: tuple[Block, ...]
    edges: frozenset[tuple[int, int]]  # (i, j): edge from vertex i to vertex j
    closed: bool
    sweeps: int
    seed_count: int
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {b.key(): i for i, b in enumerate(self.vertices)}

    def index_of(self, block: Block) -> int:
        return self._index[block.key()]

    def __contains__(self, block: Block) -> bool:
        return block.key() in self._index

    def adjacency(self) -> AdjacencyMatrix:
        n = len(self.vertices)
        rows = [[0] * n for _ in range(n)]
        for b, c in self.edges:
            rows[c][b] = 1
        return AdjacencyMatrix(tuple(tuple(r) for r in rows))

    def parent_char(self, i: int) -> str:
        return self.vertices[i].parent_char()

    def to_json_dict(self) -> dict:
        return {
            "H": self.H,
            "W": self.W,
            "closed": self.closed,
            "sweeps": self.sweeps,
            "seed_count": self.seed_count,
            "vertices": [v.format(self.spec) for v in self.vertices],
            "vertex_keys": [v.key() for v in self.vertices],
            "edges": sorted(list(e) for e in self.edges),
        }


def _rebuild(spec: GroupSpec, ray_word: Word, ops: tuple[str, ...], radius: int) -> HorofunctionPatch:
    """Replay parent/child ops from a ray so the result has the requested radius."""
    h = busemann_patch(Ray(spec, ray_word), radius + len(ops))
    for op in ops:
        h = parent_horofunction(h) if op == "P" else child_patch(h, op[1])
    return h


def enumerate_blocks(
    spec: GroupSpec,
    H: int,
    W: int,
    seed_rays: list[Ray],
    depth: int,
) -> BlockGraph:
    """Close the seed blocks under parent and child transitions.

    ``depth`` bounds the number of closure sweeps; each discovered vertex keeps
    a (ray, ops) witness from which a fresh patch of any needed radius is
    rebuilt.  If the budget runs out with frontier vertices left, the graph is
    returned with closed=False.
    """
    radius = H + W + 2
    min_len = required_ray_length(spec, radius + depth + 1)
    for ray in seed_rays:
        if len(ray) < min_len:
            raise ValueError(
                f"seed ray of length {len(ray)} too short: depth {depth} with "
                f"window (H={H}, W={W}) needs length >= {min_len}"
            )

    reps: dict[str, tuple[Word, tuple[str, ...]]] = {}
    blocks: dict[str, Block] = {}
    edges: set[tuple[str, str]] = set()

    frontier: list[str] = []
    for ray in seed_rays:
        blk = block_of(busemann_patch(ray, radius), H, W)
        if blk.key() not in blocks:
            blocks[blk.key()] = blk
            reps[blk.key()] = (ray.word, ())
            frontier.append(blk.key())

    sweeps = 0
    while frontier and sweeps < depth:
        sweeps += 1
        next_frontier: list[str] = []
        for key in sorted(frontier, key=lambda k: (len(k), k)):
            ray_word, ops = reps[key]
            h = _rebuild(spec, ray_word, ops, radius)

            par = parent_horofunction(h)
            pblk = block_of(par, H, W)
            edges.add((pblk.key(), key))
            if pblk.key() not in blocks:
                blocks[pblk.key()] = pblk
                reps[pblk.key()] = (ray_word, ops + ("P",))
                next_frontier.append(pblk.key())

            for c, cblk in child_blocks(h, H, W):
                edges.add((key, cblk.key()))
                if cblk.key() not in blocks:
                    blocks[cblk.key()] = cblk
                    reps[cblk.key()] = (ray_word, ops + ("C" + c,))
                    next_frontier.append(cblk.key())
        frontier = next_frontier

    order = sorted(blocks.values(), key=lambda b: b.sort_key())
    pos = {b.key(): i for i, b in enumerate(order)}
    return BlockGraph(
        spec=spec,
        H=H,
        W=W,
        vertices=tuple(order),
        edges=frozenset((pos[a], pos[b]) for a, b in edges),
        closed=not frontier,
        sweeps=sweeps,
        seed_count=len(seed_rays),
    )


def default_block_graph(
    spec: GroupSpec, H: int, W: int, depth: int = 16, seeds: int = 8, rng_seed: int = 0
) -> BlockGraph:
    """Deterministic convenience enumeration from sampled seed rays."""
    length = required_ray_length(spec, H + W + 3 + depth) + 1
    rays = sample_rays(spec, seeds, length, random.Random(rng_seed))
    return enumerate_blocks(spec, H, W, rays, depth)


# ------------------------------------------------------------------- codings


def path_coding(h: HorofunctionPatch, length: int, H: int, W: int) -> tuple[Block, ...]:
    """The sequence Block(Par^n(h)) for n = 0..length-1."""
    if length == 0:
        return ()
    if h.radius < length + H + W + 1:
        raise PatchTooSmall(
            f"coding length {length} with window (H={H}, W={W}) needs radius "
            f">= {length + H + W + 1}, have {h.radius}"
        )
    out = []
    cur = h
    for n in range(length):
        out.append(block_of(cur, H, W))
        if n + 1 < length:
            cur = parent_horofunction(cur)
    return tuple(out)


def coding_for_ray(spec: GroupSpec, ray: Ray, length: int, H: int, W: int) -> tuple[Block, ...]:
    return path_coding(busemann_patch(ray, length + H + W + 1), length, H, W)


def is_walk(graph: BlockGraph, coding: tuple[Block, ...]) -> bool:
    """Check that consecutive coding entries are (reverse-directed) edges of the graph."""
    idx = [graph.index_of(b) for b in coding]
    # coding reads child -> parent, i.e. edge (coding[n+1] -> coding[n])
    return all((idx[n + 1], idx[n]) in graph.edges for n in range(len(idx) - 1))


@dataclass
class InjectivityReport:
    """Result of the finite-depth coding-injectivity test."""

    H: int
    W: int
    samples: int
    depth: int
    window_radius: int
    coding_classes: int
    checked_pairs: int
    collisions: list[dict]

    @property
    def ok(self) -> bool:
        return not self.collisions

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "W": self.W,
            "samples": self.samples,
            "depth": self.depth,
            "window_radius": self.window_radius,
            "coding_classes": self.coding_classes,
            "checked_pairs": self.checked_pairs,
            "collisions": self.collisions,
            "ok": self.ok,
        }


def coding_injectivity_test(
    spec: GroupSpec,
    H: int,
    W: int,
    samples: int,
    depth: int,
    rng_seed: int = 0,
) -> InjectivityReport:
    """Check that equal codings to ``depth`` force equal patches on B(e, depth-(H+W+1)).

    Contrapositive of injectivity at finite depth: rays whose patches differ on
    the window must have distinct codings.  Collisions are reported with a
    witness element where the patches differ.
    """
    D = depth - (H + W + 1)
    if D < 1:
        raise ValueError(f"depth {depth} too small for window (H={H}, W={W})")
    length = required_ray_length(spec, depth + H + W + 1) + 1
    rays = sample_rays(spec, samples, length, random.Random(rng_seed))

    groups: dict[tuple[str, ...], list[int]] = {}
    for i, ray in enumerate(rays):
        coding = coding_for_ray(spec, ray, depth, H, W)
        groups.setdefault(tuple(b.key() for b in coding), []).append(i)

    collisions: list[dict] = []
    checked = 0
    ball = spec.ball(D)
    values: dict[int, dict[Word, int]] = {}

    def patch_values(i: int) -> dict[Word, int]:
        got = values.get(i)
        if got is None:
            h = busemann_patch(rays[i], D)
            got = {g: h.value(g) for g in ball}
            values[i] = got
        return got

    for members in groups.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                checked += 1
                va, vb = patch_values(members[a]), patch_values(members[b])
                if va != vb:
                    witness = next(g for g in ball if va[g] != vb[g])
                    collisions.append(
                        {
                            "ray1": spec.format(rays[members[a]].word),
                            "ray2": spec.format(rays[members[b]].word),
                            "witness": spec.format(witness),
                            "values": [va[witness], vb[witness]],
                        }
                    )
    return InjectivityReport(
        H=H,
        W=W,
        samples=samples,
        depth=depth,
        window_radius=D,
        coding_classes=len(groups),
        checked_pairs=checked,
        collisions=collisions,
    )
