import json

import pytest

import kvlogic


def test_parse_round_trip():
    f = kvlogic.parse("Kv1(p & q, d)")
    assert str(f) == "Kv1((p & q), d)"
    assert kvlogic.parse(str(f)) == f
    assert f.size == 4
    assert f.modal_depth == 1


def test_parse_rejects_bad_input():
    with pytest.raises(ValueError):
        kvlogic.parse("p & & q")
    with pytest.raises(ValueError):
        kvlogic.parse("[0]p")


def test_decide_verdicts():
    assert not kvlogic.decide("~Kv1(F, d)")["satisfiable"]
    assert not kvlogic.decide("p & ~p")["satisfiable"]
    assert kvlogic.decide("<1>p & <1>~p")["satisfiable"]


def test_witness_model_checks_out():
    v = kvlogic.decide("~Kv1(T, d)", model=True)
    assert v["satisfiable"]
    root = json.loads(v["model"])["root"]
    assert kvlogic.check_model(v["model"], root, "~Kv1(T, d)")
    assert v["stats"]["nodes_visited"] > 0


def test_oracle():
    assert kvlogic.oracle_sat("p & ~p") is None
    found = kvlogic.oracle_sat("~Kv1(T, d)")
    assert found is not None
    root = json.loads(found)["root"]
    assert kvlogic.check_model(found, root, "~Kv1(T, d)")


def test_verify_proof():
    assert kvlogic.verify_proof("1. p -> p ; TAUT\n")["ok"]
    r = kvlogic.verify_proof("1. p ; TAUT\n")
    assert not r["ok"]
    assert r["line"] == 1
    with pytest.raises(ValueError):
        kvlogic.verify_proof("1. p ; BOGUS\n")
