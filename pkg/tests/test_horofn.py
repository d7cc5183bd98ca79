"""Horofunction patches: Busemann values, parent map, blocks, determinism."""

import random

import pytest

from horolab.errors import NotStabilized, PatchBoundary, PatchTooSmall, RayNotGeodesic
from horolab.horofn import (
    Ray,
    adaptive_block_parameters,
    block_of,
    busemann_patch,
    child_blocks,
    child_patch,
    determinism_test,
    parent_at,
    parent_horofunction,
    periodic_ray,
    sample_rays,
    shifted_patch,
    sphere_patch,
)


def test_ray_rejects_non_normal(f2):
    with pytest.raises(RayNotGeodesic):
        Ray(f2, f2.parse("a A a a"))


def test_busemann_values_along_a(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 1)
    values = {f2.format(g): h.value(g) for g in f2.ball(1)}
    assert values == {"": 0, "a": -1, "A": 1, "b": 1, "B": 1}


def test_busemann_values_alternating(f2):
    h = busemann_patch(periodic_ray(f2, "a b", 40), 2)
    assert h.value(f2.parse("a b")) == -2
    assert h.value(f2.parse("a")) == -1
    assert h.value(f2.parse("b")) == 1


def test_busemann_base_value_zero(z2z3):
    h = busemann_patch(periodic_ray(z2z3, "a b", 60), 2)
    assert h.base_value == 0


def test_stabilization_across_ray_lengths(f2):
    h1 = busemann_patch(periodic_ray(f2, "a b", 40), 3)
    h2 = busemann_patch(periodic_ray(f2, "a b", 55), 3)
    assert h1.materialize() == h2.materialize()


def test_short_ray_raises(f2):
    with pytest.raises(NotStabilized):
        busemann_patch(periodic_ray(f2, "a", 10), 3)


def test_patch_lipschitz_and_distance_like(f2, z2z3):
    for spec, pat in ((f2, "a b"), (z2z3, "a b")):
        h = busemann_patch(periodic_ray(spec, pat, 60), 3)
        ball = spec.ball(3)
        for x in ball:
            for y in ball:
                assert abs(h.value(x) - h.value(y)) <= spec.dist(x, y)
        for g in spec.ball(2):
            assert any(
                h.value(spec.mul(g, c)) == h.value(g) - 1 for c in spec.chars
            )


def test_patch_convexity_spot(f2):
    # vertex-level epsilon-convexity along geodesic segments, epsilon = 68*delta
    h = busemann_patch(periodic_ray(f2, "a b", 60), 4)
    eps = 68 * f2.delta
    ball = f2.ball(4)
    rng = random.Random(0)
    for _ in range(60):
        x0, x1 = rng.choice(ball), rng.choice(ball)
        verts = f2.geodesic_vertices(x0, x1)
        L = len(verts) - 1
        if L == 0:
            continue
        for t, v in enumerate(verts):
            bound = ((L - t) * h.value(x0) + t * h.value(x1)) / L + eps
            assert h.value(v) <= bound


def test_parent_at_examples(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 2)
    assert f2.format(parent_at(h, "")) == "a"
    assert parent_at(h, f2.parse("b")) == ""  # b's parent is e
    for g in f2.ball(1):
        assert h.value(parent_at(h, g)) == h.value(g) - 1


def test_parent_at_boundary(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 1)
    with pytest.raises(PatchBoundary):
        parent_at(h, f2.parse("b"))


def test_parent_horofunction_strips_letter(f2):
    hb = busemann_patch(Ray(f2, f2.parse("b") + f2.parse("a") * 39), 4)
    ha = busemann_patch(periodic_ray(f2, "a", 40), 3)
    par = parent_horofunction(hb)
    assert par.base_value == -1
    assert {g: par.value(g) - par.base_value for g in f2.ball(3)} == {
        g: ha.value(g) for g in f2.ball(3)
    }


def test_parent_iteration_drops_base(f2):
    h = busemann_patch(periodic_ray(f2, "a b", 45), 6)
    cur = h
    for n in range(1, 5):
        cur = parent_horofunction(cur)
        assert cur.base_value == -n
    with pytest.raises(PatchBoundary):
        parent_horofunction(busemann_patch(periodic_ray(f2, "a", 40), 1))


def test_block_examples(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 2)
    blk = block_of(h, 1, 0)
    assert blk.format(f2) == [["", 0], ["a", -1]]
    hb = busemann_patch(periodic_ray(f2, "b a", 41), 2)
    assert block_of(hb, 1, 0).format(f2) == [["", 0], ["b", -1]]
    assert blk.parent_char() == f2.parse("a")


def test_block_additive_invariance(f2):
    h = busemann_patch(periodic_ray(f2, "a b", 40), 2)
    assert block_of(h, 1, 0) == block_of(shifted_patch(h, 5), 1, 0)


def test_block_too_small(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 1)
    with pytest.raises(PatchTooSmall):
        block_of(h, 1, 1)


def test_block_wider_window(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 4)
    blk = block_of(h, 2, 1)
    words = {f2.format(w) for w, _ in blk.members}
    # chain e, a, aa plus the same-level neighbors within distance 1
    assert {"", "a", "aa"} <= words
    offsets = dict(blk.members)
    assert offsets[f2.parse("a")] == -1
    assert offsets[f2.parse("a a")] == -2


def test_children_of_direction_block(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 4)
    kids = child_blocks(h, 1, 0)
    letters = [f2.format(c) for c, _ in kids]
    assert letters == ["a", "b", "B"]  # everything except the inverse direction A
    keys = {b.parent_char() for _, b in kids}
    assert keys == {f2.parse("a"), f2.parse("b"), f2.parse("B")}


def test_child_patch_value_shift(z2z3):
    h = busemann_patch(periodic_ray(z2z3, "b a", 62), 3)
    child = child_patch(h, z2z3.parse("a"))
    assert child.value("") == h.value(z2z3.parse("a"))


def test_sphere_patch_matches_distance(f2):
    g = f2.parse("a b a")
    h = sphere_patch(f2, g, 3, 2)
    for f in f2.ball(2):
        assert h.value(f) == f2.dist(f, g) - 3


def test_patch_json_serialization(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 1)
    d = h.to_json_dict()
    assert d["radius"] == 1
    assert d["base_value"] == 0
    assert ["a", -1] in d["entries"]


def test_determinism_small(f2, z2z3):
    assert determinism_test(f2, 1, 0, pairs=40, depth=6, rng_seed=2).ok
    assert determinism_test(z2z3, 1, 0, pairs=40, depth=6, rng_seed=2).ok


def test_adaptive_parameters(f2, z2z3):
    for spec in (f2, z2z3):
        H, W, trail = adaptive_block_parameters(spec, pairs=25, depth=6, rng_seed=1)
        assert (H, W) == (1, 0)
        assert trail[-1].ok


def test_sample_rays_distinct_normal(f2):
    rays = sample_rays(f2, 30, 20, random.Random(9))
    words = {r.word for r in rays}
    assert len(words) == 30
    for r in rays:
        assert f2.normalize(r.word) == r.word
