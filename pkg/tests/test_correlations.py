import numpy as np
import pytest

from randcorr_hub.core.correlations import (
    correlation_function,
    correlation_tensor,
    entanglement_report,
    entanglement_threshold,
    export_tensor_csv,
    is_entangled_pure,
    length_of_correlations,
    purity_length_of_correlations,
    sector_lengths,
    subset_length,
)
from randcorr_hub.core.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    InvalidStateError,
)
from randcorr_hub.core.opbasis import (
    gell_mann_basis,
    random_mixed_basis,
    weyl_heisenberg_basis,
)
from randcorr_hub.core.statekit import (
    bloch_vector,
    double_singlet,
    five_qubit_counterexample,
    ghz,
    is_fully_product,
    locc_phi,
    locc_psi,
    measure_party,
    product,
    random_density_matrix,
    random_entangled_state,
    random_product_state,
    random_pure_state,
    singlet,
    w,
    w_family,
)

Z = [0.0, 0.0, 1.0]
X = [1.0, 0.0, 0.0]


def test_correlation_function_values():
    assert correlation_function(singlet(), [Z, Z]) == pytest.approx(-1.0)
    assert correlation_function(product([0, 0]), [Z, Z]) == pytest.approx(1.0)
    assert correlation_function(ghz(3), [X, X, X]) == pytest.approx(1.0)


def test_correlation_function_rejects_non_unit_vector():
    with pytest.raises(InvalidParameterError):
        correlation_function(singlet(), [[0, 0, 1.1], Z])
    with pytest.raises(DimensionMismatchError):
        correlation_function(singlet(), [Z])


def test_correlation_tensor_of_singlet():
    tensor = correlation_tensor(singlet())
    np.testing.assert_allclose(tensor.full_block(), -np.eye(3), atol=1e-12)
    assert tensor.entry((0, 0)) == pytest.approx(1.0)
    assert tensor.is_real()


def test_correlation_tensor_pure_and_mixed_agree(rng):
    psi = random_entangled_state([2, 3], rng)
    pure = correlation_tensor(psi).coefficients
    mixed = correlation_tensor(psi.to_density_matrix()).coefficients
    np.testing.assert_allclose(pure, mixed, atol=1e-12)


def test_correlation_tensor_full_block_only():
    tensor = correlation_tensor(ghz(3), full_block_only=True)
    assert tensor.coefficients.shape == (3, 3, 3)
    assert tensor.length() == pytest.approx(4.0)
    with pytest.raises(InvalidParameterError):
        tensor.entry((0, 1, 1))


def test_basis_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        correlation_tensor(singlet(), gell_mann_basis(3))


@pytest.mark.parametrize("state, expected", [
    (ghz(3), 4.0),
    (ghz(4), 9.0),
    (double_singlet(), 9.0),
    (five_qubit_counterexample(), 8.0),
    (locc_psi(), 8.0),
    (locc_phi(), 9.0),
    (product([0, 0, 0, 0]), 1.0),
    (w(3), 11.0 / 3.0),
])
def test_length_of_correlations(state, expected):
    assert length_of_correlations(state) == pytest.approx(expected, abs=1e-9)


def test_counterexample_branches():
    psi = five_qubit_counterexample()
    for outcome in (0, 1):
        probability, branch = measure_party(psi, 0, outcome)
        assert probability == pytest.approx(0.5)
        assert length_of_correlations(branch) == pytest.approx(9.0, abs=1e-9)


def test_length_is_basis_independent(rng):
    psi = random_entangled_state([3, 3], rng)
    reference = length_of_correlations(psi)
    for basis in (weyl_heisenberg_basis(3), random_mixed_basis(3, 1),
                  random_mixed_basis(3, 2)):
        assert length_of_correlations(psi, basis) == pytest.approx(reference,
                                                                   abs=1e-9)


def test_length_does_not_depend_on_workers(rng):
    psi = random_entangled_state([2, 2, 2, 2], rng)
    assert length_of_correlations(psi, workers=1) == \
        length_of_correlations(psi, workers=3)


def test_mixed_length_matches_purity_route(rng):
    rho = random_density_matrix([2, 3], 2, rng)
    assert length_of_correlations(rho) == \
        pytest.approx(purity_length_of_correlations(rho), abs=1e-9)
    assert length_of_correlations(w_family(0.5)) == \
        pytest.approx(1.0 + 8.0 / 3.0 * 0.25, abs=1e-9)


def test_sector_lengths_of_ghz():
    sectors = sector_lengths(ghz(3))
    np.testing.assert_allclose(sectors.values, [1, 0, 3, 4], atol=1e-10)
    assert sectors.total() == pytest.approx(8.0)


def test_sector_lengths_of_product():
    sectors = sector_lengths(product([0, 0, 0]))
    np.testing.assert_allclose(sectors.values, [1, 3, 3, 1], atol=1e-10)


def test_sector_sum_for_pure_states(rng):
    psi = random_entangled_state([2, 2, 2], rng)
    assert sector_lengths(psi).total() == pytest.approx(8.0, abs=1e-9)


def test_product_states_sit_on_threshold(rng):
    psi = random_product_state([3, 3, 2], rng)
    verdict = is_entangled_pure(psi)
    assert entanglement_threshold(psi.shape) == pytest.approx(4.0)
    assert verdict.margin == pytest.approx(0.0, abs=1e-9)
    assert not verdict.entangled


@pytest.mark.parametrize("state, margin", [
    (singlet(), 2.0),
    (product([0, 0, 0]), 0.0),
])
def test_entanglement_margin(state, margin):
    assert is_entangled_pure(state).margin == pytest.approx(margin, abs=1e-9)


def test_qutrit_ghz_is_entangled():
    verdict = is_entangled_pure(ghz(2, 3))
    assert verdict.entangled
    assert verdict.margin > 0


def test_criterion_rejects_mixed_states():
    with pytest.raises(InvalidStateError):
        is_entangled_pure(w_family(0.3))


def test_subset_length_of_ghz_pair():
    assert subset_length(ghz(3), [0, 2]) == pytest.approx(1.0, abs=1e-12)


def test_entanglement_report():
    report = entanglement_report(ghz(4))
    assert report["C"] == pytest.approx(9.0)
    assert report["entangled"] is True
    assert len(report["sector_lengths"]) == 5
    mixed = entanglement_report(w_family(0.2))
    assert mixed["entangled"] is None


def test_export_tensor_csv(tmp_path):
    path = tmp_path / "tensor.csv"
    assert export_tensor_csv(correlation_tensor(singlet()), str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "mu1,mu2,re,im"
    assert len(lines) == 1 + 16


STATE_COUNTS = [200, pytest.param(1000, marks=pytest.mark.slow)]


@pytest.mark.parametrize("count", STATE_COUNTS)
@pytest.mark.parametrize("n", [3, 5])
def test_odd_qubit_sector_identities(rng, n, count):
    for _ in range(count):
        sectors = sector_lengths(random_pure_state([2] * n, rng))
        assert sectors.alternating_sum() == pytest.approx(0.0, abs=1e-10)
        assert sectors.total() == pytest.approx(2.0 ** n, abs=1e-10)


@pytest.mark.parametrize("count", STATE_COUNTS)
def test_three_qubit_pair_lengths_sum_to_three(rng, count):
    for _ in range(count):
        psi = random_pure_state([2, 2, 2], rng)
        pairs = (subset_length(psi, [0, 1]) + subset_length(psi, [0, 2])
                 + subset_length(psi, [1, 2]))
        assert pairs == pytest.approx(3.0, abs=1e-10)


@pytest.mark.parametrize("count", STATE_COUNTS)
@pytest.mark.parametrize("n", [2, 3])
def test_length_is_one_only_for_unit_bloch_vectors(rng, n, count):
    for i in range(count):
        if i % 2:
            psi = random_product_state([2] * n, rng)
        else:
            psi = random_pure_state([2] * n, rng)
        length = length_of_correlations(psi)
        unit = all(bloch_vector(psi, p).squared_length > 1 - 1e-9
                   for p in range(n))
        assert length >= 1 - 1e-10
        assert (abs(length - 1) < 1e-9) == unit
        assert unit == bool(i % 2)


@pytest.mark.parametrize("count", STATE_COUNTS)
@pytest.mark.parametrize("n", [3, 5])
def test_random_states_stay_below_odd_qubit_maximum(rng, n, count):
    maximum = 2.0 ** (n - 1)
    assert length_of_correlations(ghz(n)) == pytest.approx(maximum, abs=1e-10)
    for _ in range(count):
        psi = random_pure_state([2] * n, rng)
        assert length_of_correlations(psi) <= maximum + 1e-10


@pytest.mark.parametrize("count", STATE_COUNTS)
@pytest.mark.parametrize("dims", [(2, 2), (3, 3), (2, 2, 2), (3, 2)])
def test_criterion_matches_product_structure(rng, dims, count):
    for _ in range(count):
        for psi in (random_product_state(dims, rng),
                    random_entangled_state(dims, rng)):
            verdict = is_entangled_pure(psi)
            assert verdict.entangled == (not is_fully_product(psi))
            assert verdict.margin >= -1e-9
