import numpy as np
import pytest

from cutset_sampling.bench import gen_coding, gen_grid, gen_random, gen_twolayer
from cutset_sampling.errors import ModelError
from cutset_sampling.netfile import (
    dumps_cutset,
    dumps_evidence,
    dumps_marginals,
    dumps_net,
    loads_cutset,
    loads_evidence,
    loads_marginal_csv,
    loads_net,
    read_net,
    write_net,
)

import oracles


def test_chain3_text_matches_docstring_layout(chain):
    text = dumps_net(chain)
    assert text.splitlines()[:5] == ["var X1 2", "var X2 2", "var X3 2", "cpt X1 |", "0.4 0.6"]
    assert loads_net(text) == chain


@pytest.mark.parametrize(
    "net",
    [gen_random(50, 10, 3, seed=1), gen_twolayer(10, 40, 3, seed=1), gen_grid(5, 6, seed=1), gen_coding(8, seed=1)],
    ids=["random", "twolayer", "grid", "coding"],
)
def test_round_trip_benchmarks(net, tmp_path):
    path = tmp_path / "n.net"
    write_net(net, path)
    back = read_net(path)
    assert back == net
    assert dumps_net(back) == dumps_net(net)


def test_round_trip_ternary(rng):
    net = oracles.random_net(rng, 8, ternary=0.5)
    assert loads_net(dumps_net(net)) == net


def test_comments_and_blank_lines():
    text = "# header\nvar a 2\n\nvar b 3   # three values\ncpt a |\n0.5 0.5\ncpt b | a\n0.2 0.3 0.5\n0.1 0.1 0.8\n"
    net = loads_net(text)
    assert net.cards == (2, 3) and net.parents == ((), (0,))


@pytest.mark.parametrize(
    "text",
    [
        "var a\n",
        "var a 2\nvar a 2\n",
        "var a x\n",
        "var a 0\n",
        "var a 2\ncpt a\n0.5 0.5\n",
        "var a 2\ncpt b |\n",
        "var a 2\ncpt a | z\n",
        "var a 2\ncpt a |\n0.5 0.5\ncpt a |\n0.5 0.5\n",
        "0.5 0.5\n",
        "var a 2\ncpt a |\n0.5 half\n",
        "var a 2\nvar b 2\ncpt a |\n0.5 0.5\n",
        "var a 2\ncpt a |\n0.5 0.2 0.3\n",
    ],
)
def test_malformed_files(text):
    with pytest.raises(ModelError):
        loads_net(text)


def test_evidence_and_cutset_round_trip(chain):
    e = {2: 1, 0: 0}
    assert loads_evidence(chain, dumps_evidence(chain, e)) == {0: 0, 2: 1}
    assert dumps_evidence(chain, e) == "X1 0\nX3 1\n"
    assert loads_cutset(chain, dumps_cutset(chain, [1, 0])) == [1, 0]
    with pytest.raises(ModelError):
        loads_evidence(chain, "X1 0\nX1 1\n")
    with pytest.raises(ModelError):
        loads_evidence(chain, "X1\n")
    with pytest.raises(ModelError):
        loads_cutset(chain, "X1 X1\n")
    with pytest.raises(ModelError):
        loads_cutset(chain, "nope\n")


def test_marginal_csv(chain):
    est = {0: np.array([0.208, 0.792]), 1: np.array([0.1, 0.9])}
    text = dumps_marginals(chain, est)
    assert text.splitlines()[1] == "X1,0,0.208000000"
    parsed = loads_marginal_csv(text)
    assert parsed[("X2", 1)] == pytest.approx(0.9, abs=1e-12)
    with_exact = dumps_marginals(chain, est, {0: np.array([0.2, 0.8]), 1: np.array([0.1, 0.9])})
    assert with_exact.splitlines()[0] == "variable,value,estimate,exact,abs_error"
    assert with_exact.splitlines()[1] == "X1,0,0.208000000,0.200000000,0.008000000"
    assert loads_marginal_csv(with_exact) == parsed
    reordered = "estimate,variable,value\n" + "".join(f"{p},{k[0]},{k[1]}\n" for k, p in parsed.items())
    assert loads_marginal_csv(reordered) == parsed
    with pytest.raises(ModelError):
        loads_marginal_csv("variable,value\nX1,0\n")
    with pytest.raises(ModelError):
        loads_marginal_csv("variable,value,estimate\nX1,0,0.5\nX1,0,0.5\n")
