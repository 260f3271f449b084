import random

import pytest

from chweights import suites
from chweights.errors import SchemaError
from chweights.slopes import etale_vgen
from chweights.trianguline import ModuleClass


@pytest.mark.parametrize("seed", [1, 2])
def test_small_sweeps_pass_on_other_seeds(seed):
    checks = [
        suites.lattice_uniqueness(seed, cases=30),
        suites.coprime_recovery(seed, cases=60),
        suites.etale_oracle(seed, cases=60, twist_cases=20),
        suites.kappa_homomorphism(seed, cases=60),
        suites.dot_identities(seed, per_n=20),
        suites.intertwining(seed, cases=8),
        suites.rearrangement(seed, nmax=4, flags_per_n=2),
    ]
    failed = [(r.name, r.counterexample) for r in checks if not r.passed]
    assert not failed


def test_lattice_suite_records_gap_one_refusal():
    res = suites.lattice_uniqueness(0, cases=5)
    assert res.passed and res.notes["gap_one_refusal"]


def test_all_splits_option():
    res = suites.lattice_uniqueness(3, cases=10, nmax=3, all_splits=True)
    assert res.passed and res.cases == 11


def test_fail_keeps_first_counterexample():
    r = suites.SuiteResult("x")
    r.fail(case=1)
    r.fail(case=2)
    assert not r.passed and r.counterexample == {"case": 1}
    assert r.as_dict()["counterexample"] == {"case": 1}


def test_generators_meet_their_contracts():
    rng = random.Random(5)
    for _ in range(20):
        n = rng.randint(1, 5)
        D = suites.random_very_generic_etale(rng, n)
        assert D.class_tag is ModuleClass.VERY_GENERIC and etale_vgen(D).verdict
        L, eig = suites.random_semisimple(rng, n)
        assert sorted(eig) == sorted(set(eig)) and L.charpoly().degree == n
        h = suites.random_regular_weights(rng, n)
        assert list(h) == sorted(set(h), reverse=True)


def test_unknown_suite():
    with pytest.raises(SchemaError):
        suites.verify_suites(0, ["nope"])


def test_summary_shape():
    out = suites.verify_suites(4, ["dot-actions", "translation-diff"])
    assert out["passed"] and out["pass_count"] == out["total"] == 2 and out["seed"] == 4
