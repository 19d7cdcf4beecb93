import math
import os

import pytest

import dendrite

Y = """rtree v1
vertex v0
vertex v1
vertex v2
vertex v3
edge v0 v1 1
edge v1 v2 2
edge v1 v3 3
root v0
"""


@pytest.fixture
def y():
    return dendrite.Tree.parse(Y)


def test_metric(y):
    assert y.vertex_count == 4
    assert y.distance("v2", "v3") == 5.0
    assert y.distance("v1/v3@1.5", "v2") == 3.5
    assert y.diameter() == 5.0


def test_potential(y):
    assert y.capacity(["v2"], ["v3"]) == pytest.approx(0.1, rel=1e-14)
    assert y.green("v2", "v3", "v0") == 6.0
    assert y.hitting_probability("v0", "v2", "v3") == pytest.approx(0.6, rel=1e-15)
    # length measure: 2 (1*3 + ∫ over v1-v2 of (3+s) + ∫ over v1-v3 of (3-s))
    assert y.occupation("v2", "v3") == pytest.approx(2 * (3 + 8 + 4.5), rel=1e-12)


def test_spectrum():
    interval = dendrite.Tree.parse("rtree v1\nvertex a\nvertex b\nedge a b 1\nroot a\n")
    lam = interval.principal_eigenvalue("a", mesh_h=1e-3)
    assert abs(lam - math.pi**2 / 8) / (math.pi**2 / 8) < 1e-2
    lo, hi = interval.eigenvalue_bounds("a", mesh_h=1e-3)
    assert lo <= lam <= hi
    assert interval.spectral_gap(mesh_h=0.01) > 0


def test_classify():
    assert dendrite.classify_kary(2, 2.0)["verdict"] == "recurrent"
    assert dendrite.classify_kary(3, 2.0)["verdict"] == "transient"
    assert dendrite.classify_kary(2, 1.0, random_walk=True)["verdict"] == "transient"
    assert abs(dendrite.box_counting_dimension(2, 1.5) - math.log(2) / math.log(1.5)) < 0.05
    assert dendrite.effective_resistance(2, 1.0, 60) == pytest.approx(2.0)
    t = dendrite.kary_tree(2, 2.0, depth=3)
    assert "# generator kary k=2 c=2" in t.serialize()


def test_simulation_is_reproducible(y):
    p1, se1 = y.simulate_hitting_probability("v0", "v2", "v3", mesh_h=0.25, walks=4000, seed=7, threads=1)
    p2, se2 = y.simulate_hitting_probability("v0", "v2", "v3", mesh_h=0.25, walks=4000, seed=7, threads=4)
    assert (p1, se1) == (p2, se2)
    assert abs(p1 - 0.6) <= 4 * se1


def test_errors(y):
    with pytest.raises(ValueError):
        dendrite.Tree.parse("rtree v1\nvertex a\nvertex b\nedge a b -1\nroot a\n")
    with pytest.raises(ValueError):
        y.distance("v0", "nope")


def test_load_fixture():
    path = os.path.join(os.environ.get("DENDRITE_TEST_DATA", os.path.dirname(__file__) + "/../data"), "y.rt")
    assert dendrite.Tree.load(path).vertex_count == 4
