"""Block digraph enumeration, adjacency, codings, injectivity."""

import json
import random

import pytest

from horolab.blockgraph import (
    coding_for_ray,
    coding_injectivity_test,
    default_block_graph,
    enumerate_blocks,
    is_walk,
    path_coding,
)
from horolab.errors import PatchTooSmall
from horolab.horofn import Ray, busemann_patch, periodic_ray, sample_rays


def test_f2_graph_shape(f2):
    g = default_block_graph(f2, 1, 0, rng_seed=0)
    assert len(g.vertices) == 4
    assert len(g.edges) == 12
    assert g.closed
    letters = [f2.format(v.parent_char()) for v in g.vertices]
    assert letters == ["a", "A", "b", "B"]
    inverse = {"a": "A", "A": "a", "b": "B", "B": "b"}
    expected = {
        (i, j)
        for i, d in enumerate(letters)
        for j, c in enumerate(letters)
        if d != inverse[c]
    }
    assert set(g.edges) == expected


def test_f3_graph_shape(f3):
    g = default_block_graph(f3, 1, 0, rng_seed=0)
    assert len(g.vertices) == 6
    assert len(g.edges) == 30
    assert g.closed


def test_z2z3_graph_shape(z2z3):
    g = default_block_graph(z2z3, 1, 0, rng_seed=0)
    assert len(g.vertices) == 3
    assert len(g.edges) == 4
    assert g.closed
    assert g.adjacency().to_rows() == [[0, 1, 1], [1, 0, 0], [1, 0, 0]]


def test_adjacency_convention(f2):
    g = default_block_graph(f2, 1, 0, rng_seed=0)
    M = g.adjacency()
    for b, c in g.edges:
        assert M.entries[c][b] == 1
    assert sum(sum(r) for r in M.to_rows()) == len(g.edges)


def test_depth_zero_not_closed(f2):
    rays = sample_rays(f2, 1, 60, random.Random(0))
    g = enumerate_blocks(f2, 1, 0, rays, depth=0)
    assert len(g.vertices) == 1
    assert not g.closed
    assert g.edges == frozenset()


def test_enumeration_deterministic(f2):
    g1 = default_block_graph(f2, 1, 0, rng_seed=5)
    g2 = default_block_graph(f2, 1, 0, rng_seed=5)
    assert [v.key() for v in g1.vertices] == [v.key() for v in g2.vertices]
    assert g1.edges == g2.edges


def test_seed_ray_too_short(f2):
    rays = sample_rays(f2, 1, 25, random.Random(0))
    with pytest.raises(ValueError):
        enumerate_blocks(f2, 1, 0, rays, depth=12)


def test_path_coding_self_similar(f2):
    g = default_block_graph(f2, 1, 0, rng_seed=0)
    cod = coding_for_ray(f2, periodic_ray(f2, "a", 40), 3, 1, 0)
    assert [b.format(f2) for b in cod] == [[["", 0], ["a", -1]]] * 3
    assert is_walk(g, cod)


def test_path_coding_strips_letters(f2):
    ray = Ray(f2, f2.parse("b") + f2.parse("A") * 39)
    cod = coding_for_ray(f2, ray, 2, 1, 0)
    assert [b.parent_char() for b in cod] == [f2.parse("b"), f2.parse("A")]


def test_path_coding_empty(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 3)
    assert path_coding(h, 0, 1, 0) == ()


def test_path_coding_too_small(f2):
    h = busemann_patch(periodic_ray(f2, "a", 40), 3)
    with pytest.raises(PatchTooSmall):
        path_coding(h, 5, 1, 0)


def test_codings_are_walks(z2z3):
    g = default_block_graph(z2z3, 1, 0, rng_seed=0)
    for ray in sample_rays(z2z3, 20, 60, random.Random(4)):
        cod = coding_for_ray(z2z3, ray, 6, 1, 0)
        assert is_walk(g, cod)


def test_child_multiset_function_of_vertex(f2):
    # graph-level restatement of determinism: out-edges are a function of the vertex
    g = default_block_graph(f2, 1, 0, rng_seed=0)
    outs = {}
    for b, c in g.edges:
        outs.setdefault(b, set()).add(c)
    assert all(len(outs[i]) == 3 for i in range(4))


def test_identical_rays_identical_codings(f2):
    r = periodic_ray(f2, "a b", 40)
    c1 = coding_for_ray(f2, r, 5, 1, 0)
    c2 = coding_for_ray(f2, r, 5, 1, 0)
    assert c1 == c2


def test_injectivity_f2(f2):
    rep = coding_injectivity_test(f2, 1, 0, samples=150, depth=8, rng_seed=1)
    assert rep.ok
    assert rep.coding_classes > 1


def test_injectivity_z2z3(z2z3):
    rep = coding_injectivity_test(z2z3, 1, 0, samples=150, depth=8, rng_seed=1)
    assert rep.ok
    assert rep.checked_pairs > 0  # small alphabet forces genuine collisions of codings


def test_graph_json_export(f2):
    g = default_block_graph(f2, 1, 0, rng_seed=0)
    d = g.to_json_dict()
    blob = json.dumps(d, sort_keys=True)
    assert json.loads(blob)["closed"] is True
    assert len(d["vertices"]) == 4
    assert all(len(e) == 2 for e in d["edges"])
