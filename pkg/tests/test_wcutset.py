import numpy as np
import pytest

from cutset_sampling.bench import gen_coding, gen_evidence, gen_grid, gen_random, gen_twolayer
from cutset_sampling.errors import ParameterError
from cutset_sampling.graph import adjusted_width, is_polytree, moralize
from cutset_sampling.model import BayesNet, markov_blanket
from cutset_sampling.wcutset import SELECTORS, select, select_ga, select_hg, select_mg, select_mg_chain

import oracles


def star(leaves=10):
    parents = [()] + [(0,)] * leaves
    rows = [[0.5, 0.5]] + [[0.7, 0.3, 0.2, 0.8]] * leaves
    return BayesNet.from_rows(["hub"] + [f"leaf{i}" for i in range(leaves)], [2] * (leaves + 1), parents, rows)


def polytree():
    # two roots feeding one node, which fans out; no undirected cycle
    parents = [(), (), (0, 1), (2,), (2,), (4,)]
    rows = [[0.5, 0.5], [0.4, 0.6], [0.1, 0.9] * 4, [0.3, 0.7] * 2, [0.8, 0.2] * 2, [0.5, 0.5] * 2]
    return BayesNet.from_rows(list("abcdef"), [2] * 6, parents, rows)


def small_instances():
    yield gen_random(40, 10, 3, seed=1), "leaves"
    yield gen_twolayer(10, 40, 3, seed=2), "leaves"
    yield gen_grid(5, 8, seed=3), "any"
    yield gen_coding(10, seed=4), "channel"


@pytest.mark.parametrize("method", sorted(SELECTORS))
def test_width_bound_holds(method):
    for net, policy in small_instances():
        e = gen_evidence(net, 5, policy, seed=0)
        for w in range(1, 7):
            rep = select(method, net, e, w)
            assert rep.cutset.measured_width <= w
            assert adjusted_width(net, rep.cutset.members, e) == rep.cutset.measured_width
            assert not set(rep.cutset.members) & set(e)
            assert rep.w_bound == w and rep.size == len(rep.cutset.members)
            assert all(x <= w for x in rep.width_trace)


def test_mg_chain_nested():
    for net, policy in small_instances():
        e = gen_evidence(net, 5, policy, seed=1)
        chain = select_mg_chain(net, e, 6)
        for a, b in zip(chain, chain[1:]):
            assert set(b.cutset.members) <= set(a.cutset.members)
            if len(b.width_trace) > len(a.width_trace):
                assert set(b.cutset.members) < set(a.cutset.members)
        assert select_mg(net, e, 4).cutset == chain[3].cutset


@pytest.mark.parametrize("method", sorted(SELECTORS))
def test_polytree_gives_empty(method):
    net = polytree()
    assert is_polytree(net)
    # marrying the two parents of c closes a triangle, so width 1 needs a member
    assert adjusted_width(net, (), ()) == 2
    assert len(select(method, net, {}, 1).cutset.members) == 1
    for w in (2, 3):
        assert select(method, net, {}, w).cutset.members == ()
    tree = star()
    for w in (1, 2):
        assert select(method, tree, {}, w).cutset.members == ()


@pytest.mark.parametrize("method", sorted(SELECTORS))
def test_wide_bound_gives_empty(method, rng):
    net = oracles.random_net(rng, 10)
    e = oracles.random_evidence(rng, net, 2)
    w = adjusted_width(net, (), e)
    assert select(method, net, e, max(w, 1)).cutset.members == ()


def test_diamond_w1_singleton(dia):
    valid = {v for v in range(4) if adjusted_width(dia, (v,), ()) <= 1}
    assert valid == {1, 2}
    assert adjusted_width(dia, (), ()) == 2
    for method in SELECTORS:
        members = select(method, dia, {}, 1).cutset.members
        assert len(members) == 1 and members[0] in valid


def test_grid_3x3_larger_w_smaller_cutset():
    net = gen_grid(3, 3, seed=0)
    c1, c2 = select_mg_chain(net, {}, 2)
    assert c1.cutset.measured_width <= 1 and c2.cutset.measured_width <= 2
    assert c2.size < c1.size


def test_star():
    net = star()
    assert select_hg(net, {}, 1).cutset.members == ()
    assert select_hg(net, {}, 0).cutset.members == (0,)
    sizes = [len(markov_blanket(net, v)) for v in range(net.n)]
    assert sizes[0] == max(sizes)


def test_hg_usually_smallest_at_n200():
    wins = 0
    for seed in range(20):
        net = gen_random(200, 50, 3, seed=seed)
        e = gen_evidence(net, 20, "leaves", seed=seed)
        wins += select_hg(net, e, 2).size <= select_mg(net, e, 2).size
    assert wins > 10


def test_deterministic():
    net = gen_random(60, 15, 3, seed=9)
    e = gen_evidence(net, 5, "leaves", seed=9)
    for method in SELECTORS:
        assert select(method, net, e, 2).cutset == select(method, net, e, 2).cutset


def test_ga_keeps_topological_member_order():
    net = gen_grid(4, 4, seed=0)
    members = select_ga(net, {}, 1).cutset.members
    pos = {v: k for k, v in enumerate(net.topological_order)}
    assert [pos[v] for v in members] == sorted(pos[v] for v in members)


def test_bad_arguments(chain):
    with pytest.raises(ParameterError):
        select_ga(chain, {}, -1)
    with pytest.raises(ParameterError):
        select_mg(chain, {}, 0)
    with pytest.raises(ParameterError):
        select("annealing", chain, {}, 1)
    assert select("MG", chain, {}, 1).method == "MG"


@pytest.mark.parametrize("seed", range(5))
def test_selected_cutset_width_exact_on_small_nets(seed):
    # the min-fill estimate bounds the true treewidth of what is left
    rng = np.random.default_rng(seed)
    net = oracles.random_net(rng, 11)
    for w in (1, 2):
        members = select_hg(net, {}, w).cutset.members
        g = moralize(net, set(members))
        assert oracles.exact_treewidth({v: set(nb) for v, nb in g.adj.items()}) <= w
