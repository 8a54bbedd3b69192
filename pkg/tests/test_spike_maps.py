from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_shrink.errors import ContractError, DomainError
from spectral_shrink.spike_maps import (
    CoordinateMaps,
    Framework,
    Scale,
    SpikeValue,
    bulk_edge,
    cosine2,
    eigmap,
    eigmap_inv,
    from_bar,
    from_hat,
    psi_hat,
    signal_plus_noise_cosines,
    signal_plus_noise_eigenvalue,
    signal_plus_noise_normalized_limit,
    to_bar,
    to_hat,
    transition_point,
)

DZ = Framework.dzero()
DI = Framework.dinf()
WG = Framework.wigner()


def test_eigmap_examples():
    assert abs(eigmap(3.0, Framework.proportional(1.0)) - 4.5) < 1e-12
    assert eigmap(1.0, DZ) == 2.0
    assert abs(eigmap(-1.5, WG) - (-1.5 - 1 / 1.5)) < 1e-12
    assert eigmap(0.3, DI) == pytest.approx(1.3)


def test_eigmap_inv_examples():
    assert abs(eigmap_inv(4.5, Framework.proportional(1.0)).value - 3.0) < 1e-12
    assert abs(eigmap_inv(2.5, DZ).value - 2.0) < 1e-12
    assert eigmap_inv(1.7, DZ).value == 1.0
    assert eigmap_inv(1.0, Framework.proportional(0.25)).value == 1.5
    assert eigmap_inv(1.5, WG).value == 0.0
    assert eigmap_inv(2.0, DI).value == 1.0
    assert eigmap_inv(2.5, DZ).scale is Scale.HAT


def test_cosine_examples():
    assert abs(cosine2(3.0, Framework.proportional(1.0)) - 0.5) < 1e-12
    assert abs(cosine2(2.0, DZ) - 0.75) < 1e-12
    assert abs(cosine2(1.0, DI) - 0.5) < 1e-12
    assert cosine2(1.0, DZ) == 0.0
    assert cosine2(-1.0, WG) == 0.0
    assert cosine2(1.5, Framework.proportional(0.25)) == 0.0


def test_transition_and_edges():
    assert transition_point(Framework.proportional(4.0)) == 3.0
    assert bulk_edge(Framework.proportional(4.0)) == 9.0
    assert bulk_edge(DZ) == 2.0 and bulk_edge(WG) == 2.0 and bulk_edge(DI) == 1.0


def test_scale_mismatch_is_contract_error():
    with pytest.raises(ContractError):
        eigmap(SpikeValue(2.0, Scale.BAR), DZ)
    with pytest.raises(ContractError):
        cosine2(SpikeValue(2.0, Scale.RAW), WG)
    assert eigmap(SpikeValue(2.0, Scale.HAT), DZ) == 2.5


def test_nan_spike_rejected():
    with pytest.raises(DomainError):
        eigmap(math.nan, DZ)


def test_framework_parse():
    assert Framework.parse("prop:0.25") == Framework.proportional(0.25)
    assert Framework.parse("dzero") == DZ
    assert Framework.parse("dinf") == DI
    assert Framework.parse("wigner") == WG
    for bad in ("prop:-1", "prop:x", "other"):
        with pytest.raises(DomainError):
            Framework.parse(bad)


def _supercritical_grid(fw):
    if fw.kind.value == "proportional":
        lo = transition_point(fw)
        return lo + np.geomspace(1e-3, 50.0, 4000)
    if fw == DI:
        return np.geomspace(1e-3, 50.0, 4000)
    grid = 1.0 + np.geomspace(1e-3, 50.0, 4000)
    return np.r_[grid, -grid] if fw == WG else grid


@pytest.mark.criterion(8)
@pytest.mark.parametrize(
    "fw",
    [DZ, DI, WG, Framework.proportional(0.01), Framework.proportional(0.25), Framework.proportional(1.0), Framework.proportional(4.0)],
    ids=lambda f: f.label(),
)
def test_eigmap_round_trip(fw):
    x = _supercritical_grid(fw)
    back = eigmap_inv(eigmap(x, fw), fw).value
    assert np.max(np.abs(back - x)) < 1e-12 * max(1.0, float(np.max(np.abs(x))) / 50.0) + 1e-12


@pytest.mark.parametrize("fw", [DZ, DI, WG, Framework.proportional(0.5)], ids=lambda f: f.label())
def test_eigmap_strictly_increasing_above_transition(fw):
    x = np.sort(_supercritical_grid(fw))
    x = x[x > 0]
    assert np.all(np.diff(eigmap(x, fw)) > 0)


@pytest.mark.parametrize("fw", [DZ, DI, WG, Framework.proportional(0.5)], ids=lambda f: f.label())
def test_cosine_in_unit_interval(fw):
    x = np.linspace(0.0, 1e3, 20001)
    c = cosine2(x, fw)
    assert np.all(c >= 0) and np.all(c < 1)
    assert cosine2(1e8, fw) > 1 - 1e-6


@pytest.mark.parametrize("gamma", [1e-2, 1e-4, 1e-6])
def test_proportional_degenerates_to_dzero(gamma):
    lh = np.linspace(0.1, 5.0, 500)
    prop = Framework.proportional(gamma)
    ell = 1.0 + lh * math.sqrt(gamma)
    lam_hat = to_hat(eigmap(ell, prop), gamma)
    assert np.max(np.abs(lam_hat - eigmap(lh, DZ))) < 10 * math.sqrt(gamma)
    assert np.max(np.abs(cosine2(ell, prop) - cosine2(lh, DZ))) < 10 * math.sqrt(gamma)


@pytest.mark.criterion(8)
def test_wigner_matches_dzero_on_positive_spikes():
    x = np.linspace(1e-3, 20.0, 5000)
    assert np.array_equal(eigmap(x, WG), eigmap(x, DZ))
    assert np.array_equal(cosine2(x, WG), cosine2(x, DZ))


@pytest.mark.criterion(8)
def test_wigner_bilateral_symmetry():
    x = np.linspace(1e-3, 20.0, 5000)
    assert np.array_equal(eigmap(-x, WG), -eigmap(x, WG))
    assert np.array_equal(cosine2(-x, WG), cosine2(x, WG))
    lam = np.linspace(0.0, 30.0, 3001)
    assert np.array_equal(eigmap_inv(-lam, WG).value, -eigmap_inv(lam, WG).value)


def test_vectorized_dtype_preserved():
    x = np.array([0.5, 2.0], dtype=np.float32)
    assert eigmap(x, DZ).dtype == np.float32
    assert cosine2(x, DZ).dtype == np.float32


def test_signal_plus_noise_examples():
    assert abs(signal_plus_noise_eigenvalue(math.sqrt(2), 0.01) - 1.26) < 1e-12
    assert signal_plus_noise_eigenvalue(1.0, 0.04) == pytest.approx(1.44)
    assert abs(signal_plus_noise_normalized_limit(2.0) - 4.25) < 1e-12
    assert signal_plus_noise_normalized_limit(0.5) == 2.0
    left, right = signal_plus_noise_cosines(math.sqrt(2))
    assert abs(left - 0.75) < 1e-12 and right == 0.0
    assert signal_plus_noise_cosines(1.0) == (0.0, 0.0)
    assert abs(signal_plus_noise_cosines(10.0)[0] - 0.9999) < 1e-12
    with pytest.raises(DomainError):
        signal_plus_noise_cosines(0.0)
    with pytest.raises(DomainError):
        signal_plus_noise_eigenvalue(-1.0, 0.01)


@given(tau=st.floats(min_value=1.0001, max_value=100), beta=st.floats(min_value=1e-6, max_value=0.99))
def test_signal_plus_noise_eigenvalue_factored_form(tau, beta):
    theta2 = tau**2 * math.sqrt(beta)
    factored = (1 + theta2) * (beta + theta2) / theta2
    assert abs(signal_plus_noise_eigenvalue(tau, beta) - factored) < 1e-12 * factored


def test_coordinate_examples():
    assert abs(to_hat(1.26, 0.01) - 2.5) < 1e-12
    assert from_hat(0.0, 0.3) == 1.3
    assert to_bar(3.0, 2.0) == 1.0
    assert psi_hat(1.15, 0.01) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        to_hat(1.0, 0.0)
    with pytest.raises(DomainError):
        CoordinateMaps(-1.0)


@pytest.mark.criterion(8)
@given(
    x=st.floats(min_value=-1e3, max_value=1e3),
    gamma=st.floats(min_value=1e-8, max_value=1e4),
)
def test_coordinate_maps_are_inverse(x, gamma):
    cm = CoordinateMaps(gamma)
    scale = max(1.0, abs(x), gamma)
    assert abs(cm.from_hat(cm.to_hat(x)) - x) < 1e-12 * scale
    assert abs(cm.to_hat(cm.from_hat(x)) - x) < 1e-12 * scale / min(1.0, math.sqrt(gamma)) * 4
    assert abs(cm.from_bar(cm.to_bar(x)) - x) < 1e-12 * scale
    assert abs(cm.to_bar(cm.from_bar(x)) - x) < 1e-12 * scale / min(1.0, gamma) * 4
