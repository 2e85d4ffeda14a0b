import math
import random

import pytest

from poplink.graph import CertificateGraph, build_graph
from poplink.ingest import RecordStore
from poplink.model import Cardinality, CertificateType, LinkConstraint, LinkConstraintTable
from poplink.pairwise import LinkSet
from poplink.relational import FUNCTIONS, METHODS, RelationalLinker, adar_weight, score_relational
from poplink.validation import ConfigError

from conftest import B, C, D, M, make_cert, random_store
from oracles import brute_relational
from test_graph import random_links


def graph_from(vocab, edges, types=None):
    """edges: (cert, cert, [link scores]); every cert is a census of children by default."""
    types = types or {}
    counts = {}
    links = {}
    for a, b, scores in edges:
        for s in scores:
            counts[a] = counts.get(a, 0) + 1
            counts[b] = counts.get(b, 0) + 1
            key = tuple(sorted((a, b)))
            ra, rb = f"{a}-{counts[a]}", f"{b}-{counts[b]}"
            links.setdefault(key, []).append((ra, rb) if key[0] == a else (rb, ra))
            links[key][-1] = links[key][-1] + (s,)
    certs = []
    names = sorted({c for e in edges for c in e[:2]} | set(types))
    for c in names:
        t = types.get(c, C)
        role = {C: "Child", B: "Baby", M: "Bride", D: "Deceased"}[t]
        rows = [(role, {"first_name": "x"})] * max(1, counts.get(c, 0))
        certs.append(make_cert(vocab, c, t, 1871, rows))
    store = RecordStore(certs)
    return CertificateGraph(store, {k: sorted(v) for k, v in links.items()})


def test_jaccard_example(vocab):
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "a", [1]), ("p", "b", [1]), ("p", "c", [1]),
                           ("q", "b", [1]), ("q", "c", [1]), ("q", "d", [1])])
    assert FUNCTIONS["jaccard"](g, "p", "q") == pytest.approx(0.5)
    assert FUNCTIONS["jaccard"](g, "a", "d") == 0.0


def test_multi_jaccard_example(vocab):
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [1, 1]), ("q", "n", [1, 1, 1])])
    assert FUNCTIONS["multi_jaccard"](g, "p", "q") == pytest.approx(2 / 3)
    assert FUNCTIONS["jaccard"](g, "p", "q") == 1.0


def test_average_and_maximum_examples(vocab):
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [0.8]), ("q", "n", [0.6])])
    assert FUNCTIONS["average"](g, "p", "q") == pytest.approx(0.7)
    assert FUNCTIONS["maximum"](g, "p", "q") == pytest.approx(0.8)
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [0.42]), ("q", "n", [0.42])])
    assert FUNCTIONS["maximum"](g, "p", "q") == pytest.approx(0.42)


def test_multi_average_example(vocab):
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [1.0, 0.5]), ("q", "n", [0.9])])
    assert FUNCTIONS["multi_average"](g, "p", "q") == pytest.approx(0.8)


def test_adar_examples(vocab):
    # common neighbour n (degree 2) and non-common neighbour m (degree 2)
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [1]), ("q", "n", [1]), ("p", "m", [1]), ("m", "z", [1])])
    assert FUNCTIONS["adar_adamic"](g, "p", "q") == pytest.approx(0.5)
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [1]), ("q", "n", [1, 1, 1])])
    assert FUNCTIONS["multi_adar_adamic"](g, "p", "q") == pytest.approx(1 / 3)
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "n", [1, 1]), ("q", "n", [1, 1])])
    assert FUNCTIONS["multi_adar_adamic"](g, "p", "q") == 1.0


def test_adar_penalises_hubs(vocab):
    hub = [("h", f"x{i}", [1]) for i in range(98)]
    g = graph_from(vocab, [("p", "q", [0.9]), ("p", "h", [1]), ("q", "h", [1]), ("p", "m", [1]), ("m", "z", [1])] + hub)
    assert g.degree("h") == 100
    assert FUNCTIONS["adar_adamic"](g, "p", "q") < 0.5
    assert adar_weight(1) == 1.0 and adar_weight(0) == 1.0
    assert adar_weight(2) == pytest.approx(1 / math.log(3))


@pytest.mark.parametrize("name", METHODS)
def test_trivial_cases(vocab, name):
    same = graph_from(vocab, [("p", "q", [1.0]), ("p", "n", [1.0]), ("q", "n", [1.0])])
    assert FUNCTIONS[name](same, "p", "q") == pytest.approx(1.0)
    apart = graph_from(vocab, [("p", "q", [1.0]), ("p", "a", [1.0]), ("q", "b", [1.0])])
    assert FUNCTIONS[name](apart, "p", "q") == 0.0
    lone = graph_from(vocab, [("p", "q", [1.0])])
    assert FUNCTIONS[name](lone, "p", "q") == 0.0


def random_graph(vocab, seed, max_vertices=50, multi=True):
    rng = random.Random(seed)
    n = rng.randint(2, max_vertices)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 3.0 / n:
                k = rng.randint(1, 3) if multi else 1
                edges.append((f"v{i:02d}", f"v{j:02d}", [round(rng.uniform(0.4, 1.0), 6) for _ in range(k)]))
    if not edges:
        edges.append(("v00", "v01", [0.5]))
    types = {f"v{i:02d}": rng.choice([B, C, D, M]) for i in range(n)}
    return graph_from(vocab, edges, types), edges, types


def check_against_oracle(vocab, seed, multi=True):
    rng = random.Random(seed + 1)
    g, edges, types = random_graph(vocab, seed, multi=multi)
    flat = [(a, b, s) for a, b, scores in edges for s in scores]
    tnames = {c: t.value for c, t in types.items()}
    allowed = None if rng.random() < 0.5 else set(rng.sample([t.value for t in CertificateType], 2))
    filt = None if allowed is None else {CertificateType(v) for v in allowed}
    for c1, c2 in g.edges:
        for name in METHODS:
            got = FUNCTIONS[name](g, c1, c2, filt)
            want = brute_relational(name, flat, tnames, c1, c2, allowed)
            assert abs(got - want) <= 1e-9, (seed, name, c1, c2)
    return g, filt


@pytest.mark.parametrize("seed", range(60))
def test_functions_match_brute_force(vocab, seed):
    check_against_oracle(vocab, seed)


@pytest.mark.parametrize("seed", range(20))
def test_multi_variants_reduce_at_multiplicity_one(vocab, seed):
    g, filt = check_against_oracle(vocab, 1000 + seed, multi=False)
    for c1, c2 in g.edges:
        assert FUNCTIONS["multi_jaccard"](g, c1, c2, filt) == pytest.approx(FUNCTIONS["jaccard"](g, c1, c2, filt), abs=1e-12)
        assert FUNCTIONS["multi_adar_adamic"](g, c1, c2, filt) == pytest.approx(FUNCTIONS["adar_adamic"](g, c1, c2, filt), abs=1e-12)
        assert FUNCTIONS["multi_average"](g, c1, c2, filt) == pytest.approx(FUNCTIONS["average"](g, c1, c2, filt), abs=1e-12)


@pytest.fixture
def fig_store(vocab):
    return RecordStore([
        make_cert(vocab, "b1", B, 1850, [("Baby", {}), ("Mother", {}), ("Father", {})]),
        make_cert(vocab, "m1", M, 1872, [("Bride", {}), ("BrideMother", {}), ("BrideFather", {})]),
        make_cert(vocab, "c1", C, 1861, [("Head", {}), ("Wife", {}), ("Child", {})]),
        make_cert(vocab, "d1", D, 1890, [("Deceased", {}), ("DeceasedMother", {}), ("DeceasedFather", {})]),
    ])


def test_birth_marriage_scored_from_census_and_death(config, fig_store):
    links = LinkSet({
        ("b1-1", "m1-1"): 0.9,
        ("b1-1", "c1-3"): 0.8, ("b1-2", "c1-2"): 0.8, ("b1-3", "c1-1"): 0.8,
        ("c1-3", "m1-1"): 0.7, ("c1-2", "m1-2"): 0.7,
        ("b1-1", "d1-1"): 0.6, ("d1-1", "m1-1"): 0.6,
    }, 0.4)
    g = build_graph(links, fig_store)
    matches = score_relational(g, "jaccard", config.linkage_types)
    assert matches[("b1", "m1", "Birth.Baby>Marriage.Bride")] == pytest.approx(1.0)
    assert matches[("b1", "c1", "Birth.Baby>Census.Child")] == pytest.approx(0.5)
    assert all(lt in {x.name for x in config.linkage_types} for lt in matches.link_types())


def test_empty_graph_gives_no_matches(config, fig_store):
    g = build_graph(LinkSet({}, 0.4), fig_store)
    assert len(score_relational(g, "jaccard", config.linkage_types)) == 0


def test_one_to_one_constraint_limits_deaths_per_birth(config, vocab):
    certs = [make_cert(vocab, "b1", B, 1850, [("Baby", {})])]
    certs += [make_cert(vocab, f"d{i}", D, 1880 + i, [("Deceased", {})]) for i in range(3)]
    certs += [make_cert(vocab, f"c{i}", C, 1861, [("Child", {})]) for i in range(3)]
    store = RecordStore(certs)
    entries = {("b1-1", f"d{i}-1"): 0.9 - 0.1 * i for i in range(3)}
    entries.update({("b1-1", f"c{i}-1"): 0.8 for i in range(3)})
    entries.update({(f"c{i}-1", f"d{i}-1"): 0.8 for i in range(3)})
    g = build_graph(LinkSet(entries, 0.4), store)
    lt = "Birth.Baby>Death.Deceased"
    table = LinkConstraintTable({x.name: LinkConstraint(Cardinality.MANY_TO_MANY) for x in config.linkage_types} |
                                {lt: LinkConstraint(Cardinality.ONE_TO_ONE)})
    free = score_relational(g, "adar_adamic", config.linkage_types)
    assert sum(1 for k in free if k[2] == lt) == 3
    bound = score_relational(g, "adar_adamic", config.linkage_types, table)
    assert sum(1 for k in bound if k[2] == lt) == 1


@pytest.mark.parametrize("seed", range(3))
def test_workers_do_not_change_scores(config, vocab, seed):
    store = random_store(vocab, 40, seed)
    g = build_graph(random_links(store, 80, seed), store)
    one = score_relational(g, "multi_adar_adamic", config.linkage_types, config.link_constraints, workers=1)
    two = score_relational(g, "multi_adar_adamic", config.linkage_types, config.link_constraints, workers=2)
    assert one == two


def test_linker_validates(config):
    with pytest.raises(ConfigError):
        RelationalLinker("cosine").fit()
    with pytest.raises(ConfigError):
        RelationalLinker(assignment_mode="random").fit()
