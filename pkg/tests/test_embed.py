import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiplan import coinbox
from epiplan.domain import initial_state
from epiplan.embed import (
    EmbeddingError,
    IdAllocator,
    StateGraph,
    encode_goal,
    encode_state,
    fluent_dnf,
    from_dot,
    graph_record,
    read_records,
    record_graph,
    to_dot,
    to_feature_arrays,
    world_ids,
    write_records,
)
from epiplan.logic import (
    MAX_NODE_ID,
    RESERVED_BAND_END,
    And,
    Believes,
    Common,
    EpistemicProblem,
    Lit,
    Not,
    Or,
    PointedKripke,
    bisim_reduce,
    canonical_hash,
)
from epiplan.search import DfsConfig, dfs_collect

from oracles import random_structure

ONE = EpistemicProblem(("f",), ("a",), goal=(Lit(0),))
TWO = EpistemicProblem(("f", "g"), ("a", "b"))


def single_world():
    return PointedKripke.build([0], [[(0, 0)]], 0)


def named_edges(sg):
    return sorted((sg.nodes[s], sg.nodes[d], lab) for s, d, lab in sg.edges)


def test_single_world_goal_graph():
    sg = encode_state(single_world(), ONE.goal, ONE)
    assert len(sg.nodes) == 4
    assert len(sg.edges) == 3
    world = sg.nodes[sg.pointed]
    assert world >= RESERVED_BAND_END
    leaf, marker, root = 1, 2, 3
    assert named_edges(sg) == sorted([(world, world, 0), (root, leaf, 1), (marker, world, 2)])


def test_valuation_edges_link_true_fluents():
    s = PointedKripke.build([1], [[(0, 0)]], 0)
    sg = encode_state(s, ONE.goal, ONE)
    world = sg.nodes[sg.pointed]
    assert (world, 1, 3) in named_edges(sg) and (1, world, 3) in named_edges(sg)
    bare = encode_state(s, ONE.goal, ONE, link_valuations=False)
    assert len(bare.edges) == 3 and bare.label_count == 3


def test_flags_drop_goal_and_marker():
    sg = encode_state(single_world(), ONE.goal, ONE, include_goal=False, mark_pointed=False)
    assert len(sg.nodes) == 1 and sg.pointed == -1
    assert named_edges(sg) == [(sg.nodes[0], sg.nodes[0], 0)]


def test_label_ranges():
    p = coinbox()
    sg = encode_state(initial_state(p), p.goal, p)
    g = len(p.agents)
    labels = {lab for _, _, lab in sg.edges}
    assert labels <= set(range(g + 3))
    assert {g, g + 1, g + 2} <= labels
    assert sg.label_count == g + 3


# -- goal fragments ------------------------------------------------------------


def test_fluent_goal_fragment():
    frag = encode_goal(Lit(0), 2, IdAllocator(4), 99, 2)
    assert frag.edges == [(99, 2, 2)]


def test_belief_goal_fragment():
    frag = encode_goal(Believes(0, Lit(1)), 2, IdAllocator(4), 99, 2)
    n = 4
    assert set(frag.edges) == {(99, n, 2), (n, 0, 2), (0, n, 2), (n, 3, 2)}


def test_common_goal_fragment():
    frag = encode_goal(Common({0, 1}, Lit(0)), 2, IdAllocator(4), 99, 2)
    n = 4
    assert set(frag.edges) == {(99, n, 2), (n, 0, 2), (0, n, 2), (n, 1, 2), (1, n, 2), (n, 2, 2)}


def test_negative_literal_kept_apart():
    pos = encode_goal(Lit(0), 2, IdAllocator(4), 99, 2)
    neg = encode_goal(Lit(0, False), 2, IdAllocator(4), 99, 2)
    assert len(neg.edges) == 2 and neg.edges != pos.edges


def test_disjunction_uses_separate_branches():
    frag = encode_goal(Or(And(Lit(0), Lit(1)), Lit(1)), 2, IdAllocator(4), 99, 2)
    # one intermediate node for the two-literal disjunct, a direct link for the other
    assert (99, 3, 2) in frag.edges
    groups = [d for s, d, _ in frag.edges if s == 99]
    assert len(groups) == 2


def test_dnf():
    assert fluent_dnf(Or(Lit(0), And(Lit(1), Not(Lit(0))))) == [[(0, True)], [(1, True), (0, False)]]
    assert fluent_dnf(Not(Or(Lit(0), Lit(1)))) == [[(0, False), (1, False)]]


def test_id_band_exhaustion():
    alloc = IdAllocator(5, 6)
    assert alloc() == 5
    with pytest.raises(EmbeddingError):
        alloc()


# -- features ------------------------------------------------------------------


def test_feature_extremes():
    sg = StateGraph((0, MAX_NODE_ID), ((0, 1, 0), (0, 1, 1), (1, 0, 2), (1, 1, 3)), 1, 4, -1)
    x, idx, attr = to_feature_arrays(sg)
    assert x[0, 0] == 0.0 and x[1, 0] == 1.0
    assert np.allclose(attr[:, 0], [0, 1 / 3, 2 / 3, 1])
    assert idx.shape == (2, 4) and idx.dtype == np.int64
    assert idx[:, 2].tolist() == [1, 0]


def test_features_in_unit_interval():
    p = coinbox(tier=5)
    g = dfs_collect(p, DfsConfig(depth_limit=6, node_cap=60, rng_seed=2))
    for s in g.states.values():
        x, _, attr = to_feature_arrays(encode_state(s, p.goal, p))
        assert ((0 <= x) & (x <= 1)).all() and ((0 <= attr) & (attr <= 1)).all()


def test_invalid_graph_rejected():
    with pytest.raises(EmbeddingError):
        StateGraph((1, 1), (), 1, 2, -1)
    with pytest.raises(EmbeddingError):
        StateGraph((1, 2), ((0, 1, 5),), 1, 2, -1)


# -- dot and records -----------------------------------------------------------


def test_single_node_dot_shape():
    sg = StateGraph((RESERVED_BAND_END,), (), 1, 3, 0)
    text = to_dot(sg)
    assert text.startswith("digraph {") and f"  {RESERVED_BAND_END};" in text
    assert from_dot(text) == sg


def test_coinbox_dot_round_trip():
    p = coinbox()
    sg = encode_state(initial_state(p), p.goal, p)
    text = to_dot(sg)
    assert from_dot(text) == sg
    assert to_dot(encode_state(initial_state(p), p.goal, p)) == text


def test_record_round_trip(tmp_path):
    p = coinbox()
    sg = encode_state(initial_state(p), p.goal, p)
    write_records(tmp_path / "d.jsonl", [graph_record(sg, 3), graph_record(sg, None)])
    recs = read_records(tmp_path / "d.jsonl")
    assert recs[1]["distance"] == -1
    assert record_graph(recs[0]) == (sg, 3)
    assert record_graph(recs[1]) == (sg, None)


# -- properties ----------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.randoms(use_true_random=False))
def test_storage_order_irrelevant(seed, rnd):
    s = bisim_reduce(random_structure(random.Random(seed), 4, 2, 2))
    order = list(range(len(s.worlds)))
    rnd.shuffle(order)
    goal = (Believes(0, Lit(1)),)
    assert encode_state(s, goal, TWO) == encode_state(s.permuted(order), goal, TWO)


def test_world_ids_unique_and_in_band():
    s = PointedKripke.build([v for v in range(16) for _ in range(3)], [[]], 0)
    ids = world_ids(s)
    assert len(set(ids)) == len(ids)
    assert all(RESERVED_BAND_END <= i <= MAX_NODE_ID for i in ids)


def test_encoding_injective_on_explored_states():
    p = coinbox(tier=5)
    g = dfs_collect(p, DfsConfig(depth_limit=8, node_cap=400, rng_seed=0))
    graphs = {}
    for h, s in g.states.items():
        graphs.setdefault(encode_state(s, p.goal, p), set()).add(canonical_hash(s))
    assert all(len(v) == 1 for v in graphs.values())
    assert len(graphs) == len(g.states)
