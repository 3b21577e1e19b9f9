import pytest

from randcorr_hub.core.correlations import length_of_correlations
from randcorr_hub.core.exceptions import (
    DependentGeneratorsError,
    InvalidParameterError,
    NonCommutingGeneratorsError,
    SizeGuardError,
)
from randcorr_hub.core.stabilizer import (
    StabilizerGroup,
    gf2_rank,
    stabilizer_length_of_correlations,
    symplectic_product,
)
from randcorr_hub.core.statekit import cluster, cluster_graph, ghz


def test_symplectic_product():
    x_pauli = (0b1, 0b0)
    z_pauli = (0b0, 0b1)
    assert symplectic_product(x_pauli, z_pauli) == 1
    assert symplectic_product((0b11, 0), (0, 0b11)) == 0


def test_gf2_rank():
    assert gf2_rank([0b011, 0b110, 0b101]) == 2
    assert gf2_rank([0b001, 0b010, 0b100]) == 3


def test_from_strings_round_trip():
    group = StabilizerGroup.from_strings(["XXX", "ZZI", "-IZZ"])
    assert group.generator_string(0) == "+XXX"
    assert group.generator_string(2) == "-IZZ"
    assert group.order == 8


def test_non_commuting_generators_rejected():
    with pytest.raises(NonCommutingGeneratorsError):
        StabilizerGroup.from_strings(["XI", "ZI"])


def test_dependent_generators_rejected():
    with pytest.raises(DependentGeneratorsError):
        StabilizerGroup.from_strings(["ZZI", "IZZ", "ZIZ"])


def test_unknown_letter_rejected():
    with pytest.raises(InvalidParameterError):
        StabilizerGroup.from_strings(["XQ", "ZZ"])


def test_ghz_group_stabilizes_ghz_state():
    assert StabilizerGroup.ghz(4).stabilizes(ghz(4))
    assert not StabilizerGroup.ghz(3).stabilizes(ghz(4))


def test_graph_group_stabilizes_cluster_state():
    group = StabilizerGroup.from_graph(cluster_graph(2, 3))
    assert group.stabilizes(cluster(2, 3))


@pytest.mark.parametrize("n, expected", [
    (3, 4), (4, 9), (5, 16), (8, 129), (9, 256),
])
def test_ghz_length(n, expected):
    assert stabilizer_length_of_correlations(StabilizerGroup.ghz(n)) == expected


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_stabilizer_matches_dense_for_ghz(n):
    fast = stabilizer_length_of_correlations(StabilizerGroup.ghz(n))
    assert fast == pytest.approx(length_of_correlations(ghz(n)), abs=1e-9)


def test_cluster_2x2():
    group = StabilizerGroup.from_graph(cluster_graph(2, 2))
    value = stabilizer_length_of_correlations(group)
    assert value == 5
    assert length_of_correlations(cluster(2, 2)) == pytest.approx(5.0, abs=1e-9)


@pytest.mark.slow
def test_cluster_3x3_matches_dense():
    group = StabilizerGroup.from_graph(cluster_graph(3, 3))
    assert stabilizer_length_of_correlations(group) == \
        pytest.approx(length_of_correlations(cluster(3, 3)), abs=1e-9)


@pytest.mark.slow
def test_cluster_5x5_is_between_baselines():
    value = stabilizer_length_of_correlations(
        StabilizerGroup.from_graph(cluster_graph(5, 5))
    )
    assert 1 < value < 2 ** 24


def test_size_guard():
    with pytest.raises(SizeGuardError):
        stabilizer_length_of_correlations(StabilizerGroup.ghz(26))
