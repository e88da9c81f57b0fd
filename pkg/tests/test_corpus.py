import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orliczgn import corpus as C
from orliczgn import measure as M
from orliczgn import nfunc as N
from orliczgn.errors import BadParams
from orliczgn.norms import Channel, modular

DOMAINS = [(0.0, 1.0), (0.0, math.inf), (-math.inf, math.inf)]


def fd_audit(tf, n=64):
    lo, hi = tf.support
    hi = min(hi, lo + 40.0) if math.isinf(hi) else hi
    lo = max(lo, hi - 40.0) if math.isinf(lo) else lo
    width = hi - lo
    x = lo + width * np.linspace(0.03, 0.97, n)
    h = 1e-5 * np.maximum(np.abs(x), 1e-3)
    fd1 = (tf.u(x + h) - tf.u(x - h)) / (2 * h)
    fd2 = (tf.u1(x + h) - tf.u1(x - h)) / (2 * h)
    s1 = np.max(np.abs(tf.u1(x))) + 1e-300
    s2 = np.max(np.abs(tf.u2(x))) + 1e-300
    return np.max(np.abs(fd1 - tf.u1(x))) / s1, np.max(np.abs(fd2 - tf.u2(x))) / s2


def all_members():
    out = []
    for d in DOMAINS:
        out += C.default_corpus(d)
    out += [C.power_cutoff(0.5, 0.05), C.power_cutoff(0.25, 0.1, plateau=5, cut=1, side="right"),
            C.taper(C.hermite_decay(2), 12.0)]
    return out


def test_bump_midpoint_value():
    assert float(C.bump(0, 1)(np.array([0.5]))[0]) == pytest.approx(math.exp(-4), rel=1e-15)


def test_hermite_decay_closed_forms():
    tf = C.hermite_decay(1)
    x = np.linspace(0.1, 8, 50)
    np.testing.assert_allclose(tf.u(x), x * np.exp(-x), rtol=1e-14)
    np.testing.assert_allclose(tf.u1(x), (1 - x) * np.exp(-x), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(tf.u2(x), (x - 2) * np.exp(-x), rtol=1e-12, atol=1e-15)


@given(st.floats(0.2, 5.0), st.floats(0.0, 3.0))
def test_dilation_chain_rule(c, x0):
    base = C.poly_spline(1.0, 0.5)
    tf = C.dilate(base, c)
    x = np.array([x0])
    assert tf.u(x)[0] == base.u(c * x)[0]
    assert tf.u1(x)[0] == pytest.approx(c * base.u1(c * x)[0], rel=1e-14, abs=1e-300)
    assert tf.u2(x)[0] == pytest.approx(c * c * base.u2(c * x)[0], rel=1e-14, abs=1e-300)


@pytest.mark.parametrize("tf", all_members(), ids=lambda t: t.id)
def test_derivatives_match_finite_differences(tf):
    e1, e2 = fd_audit(tf)
    assert e1 < 1e-5 and e2 < 1e-5


@pytest.mark.parametrize("domain", DOMAINS)
def test_default_corpus_shape(domain):
    members = C.default_corpus(domain)
    assert len(members) >= 12
    lo, hi = domain
    for tf in members:
        a, b = tf.support
        assert lo <= a < b <= hi
        outside = np.array([a - 1.0, a - 1e-9, b + 1e-9, b + 1.0])
        outside = outside[np.isfinite(outside)]
        if tf.compact:
            np.testing.assert_array_equal(tf.u(outside), 0.0)
    dil = {tf.params.get("dilation", 1.0) for tf in members}
    assert {1.0, 2.0, 4.0} <= dil


def test_bounded_domain_is_compact_only():
    members = C.default_corpus((0.0, 1.0))
    assert all(tf.compact for tf in members)
    assert {tf.family for tf in members} == {"bump", "poly_spline"}


def test_half_line_adds_decaying_members_unless_strict():
    loose = C.default_corpus((0.0, math.inf))
    strict = C.default_corpus((0.0, math.inf), strict=True)
    assert any(tf.family == "hermite_decay" for tf in loose)
    assert all(tf.compact for tf in strict)
    assert len(loose) > len(strict)


def test_corpus_is_deterministic():
    a = C.default_corpus((0.0, math.inf))
    b = C.default_corpus((0.0, math.inf))
    assert [t.id for t in a] == [t.id for t in b]
    assert [t.params for t in a] == [t.params for t in b]
    assert len({t.id for t in a}) == len(a)


MEASURES = {
    (0.0, 1.0): [M.distance(0.5), M.lebesgue(0.0, 1.0)],
    (0.0, math.inf): [M.gaussian(), M.power_exponential(0.5, 1.0), M.power_weight(2.0),
                      M.power_weight(0.0)],
    (-math.inf, math.inf): [M.lebesgue()],
}


@pytest.mark.parametrize("domain", DOMAINS)
def test_modulars_are_finite(domain):
    fns = [N.power(2), N.power(4), N.powerlog(2, 1)]
    for mu in MEASURES[domain]:
        for tf in C.default_corpus(domain):
            for m in fns:
                for order in (0, 1, 2):
                    v = modular(Channel(tf, order), m, mu).value
                    assert math.isfinite(v) and v >= 0


def test_make_and_bad_params():
    assert C.make("bump", a=0, b=1).id == "bump(0,1)"
    assert C.make("hermite_decay", k=2).id == "hermite(2)"
    with pytest.raises(BadParams):
        C.make("bump", a=1)
    with pytest.raises(BadParams):
        C.make("nope")
    with pytest.raises(BadParams):
        C.bump(1, 0)
    with pytest.raises(BadParams):
        C.hermite_decay(0.5)
    with pytest.raises(BadParams):
        C.dilate(C.bump(0, 1), -1)


def test_power_cutoff_profile():
    tf = C.power_cutoff(0.5, 0.05, plateau=12, cut=1)
    s = np.linspace(-10.5, -1.5, 9)
    t = np.exp(s)
    # exact exponent sigma on the plateau, up to a constant factor
    slope = np.diff(np.log(tf.u(t))) / np.diff(s)
    np.testing.assert_allclose(slope, 0.5, atol=1e-9)
    assert tf.u(np.array([1.0]))[0] == 0.0
