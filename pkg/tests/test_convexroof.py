import numpy as np
import pytest

from randcorr_hub.core.convexroof import (
    ConvexRoofContext,
    PureDecomposition,
    bloch_decompose,
    convex_roof,
    convex_roof_oracle,
    convex_roof_rank2,
    convex_roof_search,
    decomposition_from_isometry,
    projected_s_tilde,
    rank2_closed_form,
    roof_context,
    roof_report,
    support_basis,
    w_family_sweep,
    witness_rank_m,
)
from randcorr_hub.core.correlations import length_of_correlations
from randcorr_hub.core.exceptions import (
    AsymmetricMatrixError,
    InvalidParameterError,
    RankMismatchError,
    SizeGuardError,
)
from randcorr_hub.core.models import DensityMatrix, SystemShape
from randcorr_hub.core.sampling import haar_unitaries
from randcorr_hub.core.statekit import (
    apply_local_unitaries,
    ghz,
    mixture,
    product,
    random_density_matrix,
    w,
    w_family,
)


def ghz_mixture(p: float) -> DensityMatrix:
    return mixture([p, 1 - p], [product([0, 0, 0]), ghz(3)])


def test_support_of_pure_state():
    support = support_basis(ghz(3).to_density_matrix())
    assert support.rank == 1


def test_support_of_orthogonal_mixture():
    rho = mixture([0.5, 0.5], [product([0, 0]), product([1, 1])])
    support = support_basis(rho)
    assert support.rank == 2
    projector = support.vectors @ support.vectors.conj().T
    np.testing.assert_allclose(np.diag(projector).real, [1, 0, 0, 1], atol=1e-12)


def test_w_family_rank():
    assert support_basis(w_family(0.4)).rank == 3
    assert support_basis(w_family(0.0)).rank == 1


def test_empty_support_rejected():
    rho = DensityMatrix(SystemShape([2]), np.eye(2) / 2)
    with pytest.raises(RankMismatchError):
        support_basis(rho, tol=0.9)


def test_projected_operator_reproduces_pure_length():
    support = support_basis(w(3).to_density_matrix())
    s_tilde = projected_s_tilde(support)
    assert s_tilde.shape == (1, 1)
    assert s_tilde[0, 0].real == pytest.approx(11 / 3, abs=1e-9)


def test_bloch_decomposition_reconstructs_operator():
    rho = ghz_mixture(0.5)
    support = support_basis(rho)
    s_tilde = projected_s_tilde(support)
    context = bloch_decompose(s_tilde, support.rank,
                              support.project(rho.matrix))
    np.testing.assert_allclose(context.reconstruct(), s_tilde, atol=1e-10)
    np.testing.assert_allclose(context.w_eigenvalues, [16, 16, 4], atol=1e-9)
    assert context.length() == pytest.approx(length_of_correlations(rho), abs=1e-9)
    assert context.purity() == pytest.approx(0.75, abs=1e-12)


def test_bloch_decomposition_rejects_non_hermitian_input():
    with pytest.raises(AsymmetricMatrixError):
        bloch_decompose(np.triu(np.ones((4, 4))), 2)
    with pytest.raises(AsymmetricMatrixError):
        ConvexRoofContext(2, 0.0, np.zeros(3), np.triu(np.ones((3, 3))))


@pytest.mark.parametrize("p", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_rank2_mixture_formula(p):
    expected = 1 + (1 - p) ** 2 * (4 - 1)
    assert convex_roof_rank2(ghz_mixture(p)) == pytest.approx(expected, abs=1e-8)


def test_rank2_closed_form_agrees():
    context = roof_context(ghz_mixture(0.3))
    value = context.length() + 0.5 * (1 - context.purity()) * context.w_min
    assert rank2_closed_form(context) == pytest.approx(value, abs=1e-10)


def test_rank2_near_product_limit():
    assert convex_roof_rank2(ghz_mixture(0.999)) == pytest.approx(1.0, abs=1e-5)


def test_rank2_requires_rank_two():
    with pytest.raises(RankMismatchError):
        convex_roof_rank2(w_family(0.5))
    with pytest.raises(RankMismatchError):
        convex_roof(w_family(0.5))


def test_convex_roof_of_pure_state():
    assert convex_roof(ghz(4).to_density_matrix()) == pytest.approx(9.0, abs=1e-9)


def test_witness_on_w_family():
    pure = witness_rank_m(w_family(0.0))
    assert pure["m"] == 1
    assert pure["W_value"] == pytest.approx(11 / 3, abs=1e-9)
    separable = witness_rank_m(w_family(1.0))
    assert separable["m"] == 3
    assert separable["W_value"] <= 1 + 1e-8
    assert not separable["entangled"]


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_witness_detects_entangled_w_mixtures(p):
    result = witness_rank_m(w_family(p))
    assert result["W_value"] > 1
    assert result["W_value"] == pytest.approx(1 + 8 / 3 * (1 - p) ** 2, abs=1e-8)
    assert result["entangled"]


def test_witness_is_below_exact_roof_for_rank_two():
    rho = ghz_mixture(0.4)
    assert witness_rank_m(rho)["W_value"] <= convex_roof(rho) + 1e-9


def test_roof_report():
    report = roof_report(ghz_mixture(0.5))
    assert report["rank"] == 2
    assert report["kind"] == "E"
    assert report["E_or_W"] == pytest.approx(1.75, abs=1e-8)
    assert report["entangled_flag"]
    mixed = roof_report(w_family(0.5))
    assert mixed["kind"] == "W"



def test_roof_report_uses_qudit_product_level():
    separable = roof_report(mixture([0.5, 0.5], [product([0, 0], d=3),
                                                 product([1, 1], d=3)]))
    assert separable["threshold"] == pytest.approx(4.0)
    assert separable["E_or_W"] == pytest.approx(4.0, abs=1e-8)
    assert not separable["entangled_flag"]

    entangled = roof_report(ghz(2, d=3).to_density_matrix())
    assert entangled["E_or_W"] == pytest.approx(8.0, abs=1e-9)
    assert entangled["entangled_flag"]


def test_witness_threshold_for_qutrits():
    rho = mixture([1 / 3] * 3, [product([i, i], d=3) for i in range(3)])
    result = witness_rank_m(rho)
    assert result["m"] == 3
    assert result["threshold"] == pytest.approx(4.0)
    assert not result["entangled"]

def test_w_family_sweep_rows():
    rows = w_family_sweep([0.0, 0.5, 1.0])
    assert [row["rank"] for row in rows] == [1, 3, 3]
    assert [row["detected"] for row in rows] == [True, True, False]


def test_decomposition_from_identity_isometry():
    rho = ghz_mixture(0.5)
    support = support_basis(rho)
    decomposition = decomposition_from_isometry(support, np.eye(2))
    assert len(decomposition) == 2
    assert decomposition.reproduces(rho)
    assert decomposition.average_length() >= convex_roof(rho) - 1e-9


def test_decomposition_validation():
    with pytest.raises(InvalidParameterError):
        PureDecomposition([0.5, 0.6], [ghz(3), ghz(3)])
    support = support_basis(ghz_mixture(0.5))
    with pytest.raises(InvalidParameterError):
        decomposition_from_isometry(support, 2 * np.eye(2))


def test_oracle_never_beats_exact_roof():
    rho = ghz_mixture(0.5)
    result = convex_roof_search(rho, restarts=2, seed=1)
    assert result.value >= 1.75 - 1e-6
    decomposition = result.decomposition()
    assert decomposition.reproduces(rho)
    assert decomposition.average_length() == pytest.approx(result.value, abs=1e-8)


def test_oracle_size_guard():
    rho = DensityMatrix(SystemShape([2] * 5), np.eye(32) / 32)
    with pytest.raises(SizeGuardError):
        convex_roof_oracle(rho)


@pytest.mark.slow
def test_oracle_reaches_exact_rank2_value():
    value = convex_roof_oracle(ghz_mixture(0.5), restarts=8, seed=3)
    assert value == pytest.approx(1.75, abs=0.05)



def smallest_eigenvalue_3x3(matrix: np.ndarray) -> float:
    """Наименьший корень характеристического кубического уравнения"""
    a = np.asarray(matrix, dtype=float)
    off = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    if off < 1e-30:
        return float(np.min(np.diag(a)))
    q = np.trace(a) / 3.0
    p2 = sum((a[i, i] - q) ** 2 for i in range(3)) + 2.0 * off
    p = np.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    return float(q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0))


@pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2)])
def test_w_min_is_smallest_root_of_cubic(rng, dims):
    for _ in range(20):
        context = roof_context(random_density_matrix(dims, 2, rng))
        assert context.m == 2
        assert context.w_matrix.shape == (3, 3)
        assert context.w_min == pytest.approx(
            smallest_eigenvalue_3x3(context.w_matrix), abs=1e-7)


@pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2)])
def test_convex_roof_invariant_under_local_unitaries(rng, dims):
    for _ in range(10):
        rho = random_density_matrix(dims, 2, rng)
        unitaries = list(haar_unitaries(2, len(dims), rng))
        rotated = apply_local_unitaries(rho, unitaries)
        assert convex_roof(rotated) == pytest.approx(convex_roof(rho), abs=1e-8)


def test_witness_invariant_under_local_unitaries(rng):
    rho = w_family(0.4)
    unitaries = list(haar_unitaries(2, 3, rng))
    rotated = apply_local_unitaries(rho, [unitaries[0], None, unitaries[2]])
    assert witness_rank_m(rotated)["W_value"] == pytest.approx(
        witness_rank_m(rho)["W_value"], abs=1e-8)
