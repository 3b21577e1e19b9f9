import numpy as np
import pytest

from randcorr_hub.core.correlations import length_of_correlations
from randcorr_hub.core.exceptions import (
    DimensionMismatchError,
    InvalidStateError,
    SizeGuardError,
)
from randcorr_hub.core.models import DensityMatrix, SystemShape
from randcorr_hub.core.opbasis import weyl_heisenberg_basis
from randcorr_hub.core.randomcorr import mc_twirl
from randcorr_hub.core.statekit import (
    ghz,
    locc_psi,
    product,
    random_entangled_state,
    singlet,
    w_family,
)
from randcorr_hub.core.twocopy import (
    s_operator,
    s_operator_spectrum_check,
    swap_operator,
    twirl_operator,
    two_copy_length,
    werner_alpha,
    werner_twirl,
)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_s_operator_is_dp_minus_identity(d):
    np.testing.assert_allclose(s_operator(d), d * swap_operator(d) - np.eye(d * d),
                               atol=1e-12)


def test_s_operator_in_unitary_basis():
    np.testing.assert_allclose(s_operator(3, weyl_heisenberg_basis(3)), s_operator(3),
                               atol=1e-12)


@pytest.mark.parametrize("d, upper, lower", [(2, 3, 1), (3, 6, 3)])
def test_s_operator_spectrum(d, upper, lower):
    report = s_operator_spectrum_check(d)
    assert report["passed"]
    assert report["multiplicity_symmetric"] == upper
    assert report["multiplicity_antisymmetric"] == lower


@pytest.mark.parametrize("state, expected", [
    (ghz(5), 16.0),
    (product([0, 0, 0, 0]), 1.0),
    (locc_psi(), 8.0),
])
def test_two_copy_length(state, expected):
    assert two_copy_length(state) == pytest.approx(expected, abs=1e-9)


def test_two_copy_matches_direct_length(rng):
    psi = random_entangled_state([3, 3], rng)
    assert two_copy_length(psi) == pytest.approx(length_of_correlations(psi),
                                                 abs=1e-9)


def test_two_copy_rejects_mixed_and_large_states():
    with pytest.raises(InvalidStateError):
        two_copy_length(w_family(0.5))
    with pytest.raises(SizeGuardError):
        two_copy_length(ghz(9))


def test_twirl_of_product_basis_state():
    rho = np.zeros((4, 4))
    rho[1, 1] = 1.0
    expected = (np.eye(4) - swap_operator(2) / 2) / 3
    np.testing.assert_allclose(twirl_operator(rho, 2), expected, atol=1e-12)


def test_singlet_is_twirl_fixed_point():
    rho = singlet().to_density_matrix()
    twirled = werner_twirl(rho)
    np.testing.assert_allclose(twirled.matrix, rho.matrix, atol=1e-12)
    assert werner_alpha(twirled) == pytest.approx(1.0)


def test_werner_twirl_requires_two_equal_parties():
    with pytest.raises(DimensionMismatchError):
        werner_twirl(ghz(3).to_density_matrix())
    rho = DensityMatrix(SystemShape([2, 3]), np.eye(6) / 6)
    with pytest.raises(DimensionMismatchError):
        werner_twirl(rho)


def test_monte_carlo_twirl_matches_analytic():
    rho = np.zeros((4, 4))
    rho[1, 1] = 1.0
    mean, stderr = mc_twirl(rho, 2, samples=20_000, seed=3)
    expected = twirl_operator(rho, 2)
    bound = 4 * np.abs(stderr) + 1e-3
    assert np.all(np.abs(mean - expected) <= bound)


def test_twirl_of_orthogonal_pair_vanishes():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    operator = np.kron(x, z)
    np.testing.assert_allclose(twirl_operator(operator, 2), np.zeros((4, 4)),
                               atol=1e-12)
