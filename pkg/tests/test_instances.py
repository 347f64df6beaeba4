import copy
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutplay.instances import (
    FIXTURES,
    InstanceError,
    canonical_dumps,
    content_hash,
    fixture_doc,
    game_from_doc,
    game_to_doc,
    generate_knapsack,
    load_instance,
)


def test_canonical_format():
    text = canonical_dumps({"b": [1, 2.5, float("inf")], "a": 0.1})
    assert text == '{"a":0.10000000000000001,"b":[1,2.5,null]}\n'
    with pytest.raises(ValueError):
        canonical_dumps({"x": float("nan")})


def test_hash_changes_with_content():
    doc = generate_knapsack(2, 2, 0)
    other = copy.deepcopy(doc)
    other["players"][0]["c"][0] += 1
    assert content_hash(doc) != content_hash(other)
    assert content_hash(doc) == content_hash(json.loads(canonical_dumps(doc)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(1, 6), st.integers(0, 10**6))
def test_generated_instances_round_trip(n, m, seed):
    doc = generate_knapsack(n, m, seed)
    text = canonical_dumps(doc)
    again, g = load_instance(text)
    assert canonical_dumps(again) == text
    doc2 = game_to_doc(g, doc["meta"])
    assert canonical_dumps(doc2) == text
    for p in doc["players"]:
        w, cap = p["A"][0], p["b"][0]
        assert 0 < cap < sum(w)


def test_generator_is_deterministic():
    assert canonical_dumps(generate_knapsack(2, 2, 7)) == canonical_dumps(generate_knapsack(2, 2, 7))
    assert canonical_dumps(generate_knapsack(2, 2, 7)) != canonical_dumps(generate_knapsack(2, 2, 8))


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixtures_round_trip(name):
    doc = fixture_doc(name)
    g = game_from_doc(json.loads(canonical_dumps(doc)))
    assert canonical_dumps(game_to_doc(g, doc["meta"])) == canonical_dumps(doc)


def test_dense_interaction_round_trip():
    doc = fixture_doc("example4")
    g = game_from_doc(doc)
    dense = game_to_doc(g, doc["meta"], compress=False)
    g2 = game_from_doc(dense)
    for p, q in zip(g.players, g2.players):
        assert np.array_equal(p.C, q.C)


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d.update(version=2), "$.version"),
    (lambda d: d.update(sense="sideways"), "$.sense"),
    (lambda d: d["players"][1].update(C=[[1.0, 2.0]]), "$.players[1].C"),
    (lambda d: d["players"][0].update(A=[[1.0, 2.0, 3.0]]), "$.players[0].A"),
    (lambda d: d["players"][0].update(int_idx=[5]), "$.players[0].int_idx"),
    (lambda d: d["players"][0].pop("b"), "$.players[0]"),
    (lambda d: d["players"][0]["C"].update(opponents=[0]), "$.players[0].C.opponents[0]"),
    (lambda d: d["players"][0].update(bounds={"lower": [0, 0], "upper": [None, 1]}), "$.players[0].bounds"),
])
def test_schema_errors_name_location(mutate, where):
    doc = generate_knapsack(2, 2, 0)
    mutate(doc)
    with pytest.raises(InstanceError) as exc:
        game_from_doc(doc)
    assert str(exc.value).startswith(where)


def test_invalid_json_location():
    with pytest.raises(InstanceError, match="line 1"):
        load_instance("{\"version\": 1,,}")
