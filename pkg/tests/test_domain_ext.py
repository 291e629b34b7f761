import math

import numpy as np
import pytest

from oracles import mcshane
from relu_forge.domain_ext import (
    ModulusOfContinuity,
    SampledDomain,
    approximate_on_domain,
    arc_domain,
    check_pairs,
    empirical_modulus,
    mcshane_extend,
    read_domain_csv,
)
from relu_forge.errors import ArgumentError, ParseError, PreconditionError


def _lipschitz_domain(rng, n=30, d=2, lam=1.0):
    P = rng.uniform(-1, 1, (n, d))
    w = rng.normal(size=d)
    v = lam * np.abs(P @ w) / np.linalg.norm(w)
    return SampledDomain(P, v, 1.0)


def test_extension_matches_oracle_and_interpolates():
    rng = np.random.default_rng(0)
    dom = _lipschitz_domain(rng)
    om = ModulusOfContinuity.holder(1.0, 1.0)
    g = mcshane_extend(dom, om)
    assert np.array_equal(g(dom.points), dom.values)
    for x in rng.uniform(-1, 1, (20, 2)):
        assert g(x) == pytest.approx(mcshane(dom.points.tolist(), dom.values.tolist(), om, x.tolist()), abs=1e-14)


def test_extension_with_slack_is_below_by_at_most_omega_delta():
    rng = np.random.default_rng(1)
    dom = _lipschitz_domain(rng)
    om = ModulusOfContinuity.holder(1.0, 0.5)
    Delta = 0.05
    g = mcshane_extend(dom, om, Delta)
    gap = dom.values - g(dom.points)
    assert gap.min() >= 0 and gap.max() <= om(Delta) + 1e-15


def test_extension_inherits_modulus():
    rng = np.random.default_rng(2)
    dom = _lipschitz_domain(rng, lam=2.0)
    om = ModulusOfContinuity.holder(2.0, 1.0)
    g = mcshane_extend(dom, om)
    X, Y = rng.uniform(-1, 1, (2000, 2)), rng.uniform(-1, 1, (2000, 2))
    assert np.all(np.abs(g(X) - g(Y)) <= om(np.linalg.norm(X - Y, axis=1)) + 1e-12)


def test_violating_pair_is_named():
    dom = SampledDomain([[0.0], [0.1]], [0.0, 1.0])
    with pytest.raises(PreconditionError, match=r"pair \(0, 1\)"):
        check_pairs(dom, ModulusOfContinuity.holder(1.0, 1.0), 0.0)


def test_domain_validation():
    with pytest.raises(ArgumentError):
        SampledDomain([[0.0], [0.0]], [1.0, 1.0])
    with pytest.raises(ArgumentError):
        SampledDomain([[2.0]], [1.0], R=1.0)


def test_empirical_modulus_flagged():
    rng = np.random.default_rng(3)
    P = rng.random((50, 1))
    om = empirical_modulus(P, P[:, 0])
    assert not om.rigorous
    assert om(0.5) >= 0.5 - 1e-9


def test_arc_domain_certified():
    dom, om = arc_domain(2000)
    res = approximate_on_domain(dom, om, 2, 2)
    assert res.sup_error(dom.points, dom.values) <= res.bound
    # affine rescaling round trip
    u = res.to_unit(dom.points)
    assert np.allclose(res.from_unit(u), dom.points)


def test_read_domain_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y,v\n0.1,0.2,1\n0.3,0.4,2\n")
    dom = read_domain_csv(p)
    assert dom.points.shape == (2, 2) and dom.values.tolist() == [1.0, 2.0]
    p.write_text("0.1,0.2,1\n0.3,abc,2\n")
    with pytest.raises(ParseError):
        read_domain_csv(p)
