import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcof.effective_noise import effective_variance, noise_entropy
from rcof.errors import InvalidBackhaul, RankDeficient
from rcof.integer_search import best_coeff_qcof, ifbf_coeffs
from rcof.rates import (
    Scheme,
    power_deflation,
    quantization_noise_variance,
    rate_cifbf,
    rate_cof,
    rate_ifbf,
    rate_qcof,
    rate_rcof,
    rate_rqcof,
)
from rcof.scalar_lattice import NestedLatticePair


def test_qcof_limits():
    pair = NestedLatticePair.from_snr(251, 100.0)
    assert rate_qcof(1e-12, pair) == pytest.approx(math.log2(251))
    assert rate_qcof(1e12, pair) == pytest.approx(0.0, abs=1e-9)


def test_shaping_gap_20db():
    snr = 100.0
    s2 = effective_variance([1.0], [1], snr)
    gap = rate_cof(s2, snr) - rate_qcof(s2, NestedLatticePair.from_snr(251, snr))
    assert 0.2 <= gap <= 0.3


def test_cof_examples():
    assert rate_cof(1.0, 100.0) == pytest.approx(0.5 * math.log2(100))
    assert rate_cof(100.0, 100.0) == 0.0
    assert rate_cof(effective_variance([1.0], [1], 100.0), 100.0) == pytest.approx(0.5 * math.log2(101))


def test_rqcof_examples():
    pair = NestedLatticePair.from_snr(17, 10.0)
    assert rate_rqcof([1.0], pair, 0.0).symmetric_rate == 0.0
    assert rate_rqcof([0.7], pair).symmetric_rate == pytest.approx(rate_qcof(0.7, pair))
    two = rate_rqcof([0.5, 2.0], pair)
    assert two.symmetric_rate == pytest.approx(math.log2(17) - noise_entropy(2.0, pair))
    assert two.components["max_entropy"] == pytest.approx(noise_entropy(2.0, pair))


def test_rcof_examples():
    assert rate_rcof([1.0], 100.0, 0.0).symmetric_rate == 0.0
    assert rate_rcof([1.0], 100.0).symmetric_rate == pytest.approx(rate_cof(1.0, 100.0))
    assert rate_rcof([0.5, 2.0], 100.0).symmetric_rate == pytest.approx(rate_cof(2.0, 100.0))
    assert rate_rcof([0.5, 2.0], 100.0, 1.5).symmetric_rate == 1.5


def test_backhaul_must_be_nonnegative():
    with pytest.raises(InvalidBackhaul):
        rate_rcof([1.0], 10.0, -1.0)
    with pytest.raises(InvalidBackhaul):
        rate_cifbf(np.eye(2), np.eye(2, dtype=int), 10.0, 5, 0.0)


def test_ifbf_examples():
    eye = np.eye(2, dtype=int)
    assert rate_ifbf(np.eye(2), eye, 100.0, 251).symmetric_rate == pytest.approx(0.5 * math.log2(100))
    r = rate_ifbf(np.diag([1.0, 0.5]), eye, 100.0, 251)
    assert r.components["max_norm"] == pytest.approx(4.0)
    assert r.symmetric_rate == pytest.approx(0.5 * math.log2(25))
    h = np.array([[1.0, 0.3], [-0.4, 0.9]])
    a = np.array([[1, 0], [1, 2]])
    flip = a * np.array([[1], [-1]])
    for variant in ("rcof", "rqcof"):
        assert rate_ifbf(h, flip, 30.0, 17, variant).symmetric_rate == \
            pytest.approx(rate_ifbf(h, a, 30.0, 17, variant).symmetric_rate)


def test_ifbf_rank_deficiency():
    with pytest.raises(RankDeficient):
        rate_ifbf(np.eye(2), np.array([[1, 2], [2, 4]]), 10.0, 5, "rcof")
    # full rank over R but not modulo 5
    with pytest.raises(RankDeficient):
        rate_ifbf(np.eye(2), np.array([[5, 0], [0, 1]]), 10.0, 5, "rqcof")
    assert rate_ifbf(np.eye(2), np.array([[5, 0], [0, 1]]), 10.0, 5, "rcof").symmetric_rate >= 0


def test_cifbf_examples():
    assert quantization_noise_variance(100.0, 2.0) == pytest.approx(6.25)
    assert power_deflation(2.0) == pytest.approx(16 / 15)
    r = rate_cifbf(np.eye(2), np.eye(2, dtype=int), 100.0, 251, 2.0)
    assert r.components["quantization_penalty"] == pytest.approx(0.5 * math.log2(1 + 101 / 15))
    assert r.components["quantization_penalty"] == pytest.approx(1.474, abs=2e-3)
    ifbf = rate_ifbf(np.eye(2), np.eye(2, dtype=int), 100.0, 251).symmetric_rate
    assert r.symmetric_rate == pytest.approx(ifbf - r.components["quantization_penalty"])


def test_cifbf_rqcof_uses_common_variance():
    h = np.array([[1.0, 0.0], [0.7, 1.0]])
    a = ifbf_coeffs(h, 251).a
    r = rate_cifbf(h, a, 100.0, 251, 3.0, "rqcof")
    norm = r.components["max_norm"]
    gains = np.sum(h**2, axis=1)
    expect = [norm * (1 + (1 + g * 100.0) / (2**6 - 1)) for g in gains]
    assert r.components["sigma2"] == pytest.approx(expect)


def test_cifbf_converges_to_ifbf():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = rng.standard_normal((3, 3))
        a = ifbf_coeffs(h, 251).a
        for variant in ("rcof", "rqcof"):
            for snr in (1.0, 100.0, 1000.0):
                gap = rate_ifbf(h, a, snr, 251, variant).symmetric_rate - \
                    rate_cifbf(h, a, snr, 251, 30.0, variant).symmetric_rate
                assert -1e-12 <= gap < 1e-6


def _rates_on_grid(h, snrs, r0s):
    out = {s: np.zeros((len(snrs), len(r0s))) for s in Scheme if s not in (Scheme.QCOF, Scheme.COF)}
    for i, snr in enumerate(snrs):
        pair = NestedLatticePair.from_snr(251, snr)
        # coefficients fixed across the grid so only snr and r0 move
        s2 = [effective_variance(hk, ak, snr) for hk, ak in zip(h, np.eye(len(h), dtype=int))]
        a = np.eye(len(h), dtype=int)
        for j, r0 in enumerate(r0s):
            out[Scheme.RQCOF][i, j] = rate_rqcof(s2, pair, r0).symmetric_rate
            out[Scheme.RCOF][i, j] = rate_rcof(s2, snr, r0).symmetric_rate
            out[Scheme.IFBF_RQCOF][i, j] = rate_ifbf(h, a, snr, 251, "rqcof").symmetric_rate
            out[Scheme.IFBF_RCOF][i, j] = rate_ifbf(h, a, snr, 251, "rcof").symmetric_rate
            out[Scheme.CIFBF_RQCOF][i, j] = rate_cifbf(h, a, snr, 251, r0, "rqcof").symmetric_rate
            out[Scheme.CIFBF_RCOF][i, j] = rate_cifbf(h, a, snr, 251, r0, "rcof").symmetric_rate
    return out


def test_monotone_in_snr_and_r0():
    h = np.array([[1.0, 0.0, 0.0], [0.6, 1.0, 0.0], [0.0, 0.8, 1.0]])
    snrs = np.logspace(-1, 4, 20)
    r0s = np.linspace(0.25, 10, 20)
    for scheme, grid in _rates_on_grid(h, snrs, r0s).items():
        assert np.all(grid >= 0), scheme
        assert np.all(np.diff(grid, axis=0) >= -1e-12), scheme
        assert np.all(np.diff(grid, axis=1) >= -1e-12), scheme


def test_lattice_variant_dominates_scalar_at_high_snr():
    # 1/2 log(snr / sigma2) is loose once sigma2 approaches snr, so compare
    # only where the lattice formula promises at least one bit
    rng = np.random.default_rng(1)
    checked = 0
    for _ in range(50):
        h = rng.standard_normal((3, 3))
        a = ifbf_coeffs(h, 251).a
        for snr in (10.0, 100.0, 1000.0):
            pair = NestedLatticePair.from_snr(251, snr)
            s2 = [effective_variance(hk, best_coeff_qcof(hk, snr), snr) for hk in h]
            if snr / max(s2) >= 4:
                assert rate_rcof(s2, snr).symmetric_rate >= rate_rqcof(s2, pair).symmetric_rate
                checked += 1
            ifbf = rate_ifbf(h, a, snr, 251, "rcof")
            if ifbf.symmetric_rate >= 1:
                assert ifbf.symmetric_rate >= rate_ifbf(h, a, snr, 251, "rqcof").symmetric_rate
                checked += 1
    assert checked > 100


@given(st.floats(1e-6, 1e6), st.floats(1e-3, 1e5), st.floats(0, 50))
def test_rates_never_negative(s2, snr, r0):
    pair = NestedLatticePair.from_snr(17, snr)
    assert rate_qcof(s2, pair) >= 0
    assert rate_cof(s2, snr) >= 0
    assert rate_rqcof([s2], pair, r0).symmetric_rate >= 0
    assert rate_rcof([s2], snr, r0).symmetric_rate >= 0
    if r0 > 0:
        r = rate_cifbf(np.eye(1), np.eye(1, dtype=int), snr, 17, r0, "rcof")
        assert r.symmetric_rate >= 0
        assert r.symmetric_rate == max(0.0, r.components["unclamped"])


def test_scheme_parse():
    assert Scheme.parse("rcof") is Scheme.RCOF
    assert Scheme.parse(" CIFBF_RQCoF ") is Scheme.CIFBF_RQCOF
    assert Scheme.CIFBF_RQCOF.quantized and not Scheme.IFBF_RCOF.quantized
    with pytest.raises(ValueError):
        Scheme.parse("DPC")
