import json

import numpy as np
import pytest

from conesmc.certify import SUITES, random_admissible_H, run_suite
from conesmc.sign_algebra import induced_norm


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_suites_pass(suite):
    rep = run_suite(suite, trials=60, seed=1)
    assert rep.passed, rep.counterexamples
    assert rep.checks >= 60
    json.dumps(rep.to_dict())


def test_theorem3_verifies_every_norm():
    rep = run_suite("theorem3", trials=30, seed=0)
    assert rep.stats["verified_instances"] == 30
    assert all(v == 10 for v in rep.stats["verified_by_norm"].values())


def test_injected_inadmissible_bound_fails():
    rep = run_suite("uniqueness", trials=20, seed=0, F_bar=[[1.2, 0.3], [0.3, 1.2]])
    assert not rep.passed
    assert 1 <= len(rep.counterexamples) <= 5
    json.dumps(rep.to_dict())


def test_injected_admissible_bound_passes():
    assert run_suite("uniqueness", trials=50, seed=0, F_bar=[[0.5, 0.2], [0.1, 0.4]]).passed


def test_deterministic():
    a = run_suite("cones", trials=20, seed=7).to_dict()
    b = run_suite("cones", trials=20, seed=7).to_dict()
    assert a == b


@pytest.mark.parametrize("kw", [dict(name="nope"), dict(name="cones", trials=0),
                                dict(name="cones", F_bar=np.eye(2))])
def test_bad_arguments(kw):
    with pytest.raises(ValueError):
        run_suite(**kw)


def test_random_admissible_H(rng):
    for _ in range(100):
        H = random_admissible_H(rng, 4)
        assert induced_norm(H, "infinity") <= 0.95 + 1e-12
