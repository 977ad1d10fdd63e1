import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from rcof.errors import NotInConstellation
from rcof.scalar_lattice import NestedLatticePair, mod_lattice, quantize
from rcof.zp_field import PrimeField


def test_mod_lattice_examples():
    assert mod_lattice(0.6, 1.0) == pytest.approx(-0.4)
    assert mod_lattice(2.5, 5.0) == -2.5
    assert mod_lattice(-7.3, 5.0) == pytest.approx(-2.3)
    assert mod_lattice(-2.5, 5.0) == -2.5


def test_quantize_rounds_half_up():
    assert quantize(0.5, 1.0) == 1.0
    assert quantize(-0.5, 1.0) == 0.0
    assert quantize(2.5, 5.0) == 5.0


def test_modulate_examples():
    assert NestedLatticePair(5, 1.0).modulate(0) == 0.0
    assert NestedLatticePair(5, 1.0).modulate(3) == -2.0
    assert NestedLatticePair(7, 0.5).modulate(6) == -0.5


def test_constellation_has_p_points_in_voronoi():
    for p, kappa in [(2, 1.0), (5, 1.0), (7, 0.5), (251, 0.1)]:
        pair = NestedLatticePair(p, kappa)
        pts = pair.constellation()
        assert len(np.unique(pts)) == p
        half = pair.shaping_step / 2
        assert np.all(pts >= -half) and np.all(pts < half)
        assert np.allclose(pts / kappa, np.round(pts / kappa))


def test_demodulate_examples_and_errors():
    pair = NestedLatticePair(5, 1.0)
    assert pair.demodulate(-2.0) == 3
    assert pair.demodulate(0.0) == 0
    with pytest.raises(NotInConstellation):
        pair.demodulate(0.5)
    with pytest.raises(NotInConstellation):
        pair.demodulate(3.0)  # a coarse-lattice point outside the shaping cell


def test_round_trip_251():
    pair = NestedLatticePair(251, 0.1)
    u = np.arange(251)
    assert np.array_equal(pair.demodulate(pair.modulate(u)), u)


def test_snr_relation():
    pair = NestedLatticePair.from_snr(251, 100.0)
    assert pair.snr == pytest.approx(100.0, rel=1e-12)
    assert pair.kappa == pytest.approx(np.sqrt(1200) / 251)


def test_channel_input_examples():
    pair = NestedLatticePair(5, 1.0)
    assert pair.channel_input(0, 0.0) == 0.0
    assert pair.channel_input(3, 1.7) == pytest.approx(-0.3)


def test_channel_input_power_and_uniformity():
    pair = NestedLatticePair.from_snr(17, 10.0)
    rng = np.random.default_rng(3)
    c = rng.integers(0, 17, size=10**6)
    d = pair.dither(10**6, seed=11)
    x = pair.channel_input(c, d)
    half = pair.shaping_step / 2
    assert np.all(x >= -half) and np.all(x < half)
    assert np.mean(x**2) == pytest.approx(pair.snr, rel=0.01)
    ks = stats.kstest(x, stats.uniform(loc=-half, scale=2 * half).cdf).statistic
    assert ks < 0.01


def test_dither_in_voronoi_and_reproducible():
    pair = NestedLatticePair(7, 0.3)
    d1 = pair.dither(1000, seed=5, stream=2)
    d2 = pair.dither(1000, seed=5, stream=2)
    assert np.array_equal(d1, d2)
    assert not np.array_equal(d1, pair.dither(1000, seed=5, stream=3))
    half = pair.shaping_step / 2
    assert np.all(d1 >= -half) and np.all(d1 < half)


def test_receiver_quantize_single_user():
    pair = NestedLatticePair(5, 1.0)
    x = pair.channel_input(2, 0.0)
    assert pair.receiver_quantize(x, 1.0, 0.0) == 2


def test_receiver_quantize_sum_exhaustive_z5():
    pair = NestedLatticePair(5, 1.0)
    rng = np.random.default_rng(0)
    for c1, c2 in itertools.product(range(5), repeat=2):
        d = pair.dither(2, seed=int(rng.integers(1 << 30)))
        x = pair.channel_input(np.array([c1, c2]), d)
        assert pair.receiver_quantize(x.sum(), 1.0, d.sum()) == (c1 + c2) % 5


@pytest.mark.parametrize("p", [2, 3, 5, 7])
@pytest.mark.parametrize("L", [1, 2, 3])
def test_chain_linearity_exhaustive(p, L):
    field = PrimeField(p)
    pair = NestedLatticePair.from_snr(p, 3.0)
    rng = np.random.default_rng(p * 10 + L)
    coeffs = [a for a in itertools.product(range(-2, 3), repeat=L) if any(a)]
    for a in coeffs:
        a = np.array(a)
        cs = np.array(list(itertools.product(range(p), repeat=L))).T  # L x p^L
        d = rng.uniform(-pair.shaping_step / 2, pair.shaping_step / 2, size=cs.shape)
        x = pair.channel_input(cs, d)
        u = pair.receiver_quantize(a @ x, 1.0, a @ d)
        expect = field.matvec(field.matrix(cs.T), field.natural_map(a))
        assert np.array_equal(u, expect)


@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(1e-3, 1e3))
def test_mod_lattice_idempotent_and_in_range(x, step):
    once = mod_lattice(x, step)
    assert -step / 2 <= once < step / 2
    assert mod_lattice(once, step) == once


@given(st.sampled_from([2, 3, 5, 7, 17, 251, 65521]), st.floats(1e-4, 1e3))
def test_modulation_bijective(p, kappa):
    pair = NestedLatticePair(p, kappa)
    u = np.arange(min(p, 5000))
    assert np.array_equal(pair.demodulate(pair.modulate(u)), u)
