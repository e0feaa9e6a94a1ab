import math
import warnings

import numpy as np
import pytest

from kzcal.core import (
    ModelParams,
    StateVector,
    WeightVector,
    enumerate_basis,
    get_basis,
    omega_pairing,
    weight_of,
)
from kzcal.errors import (
    DimensionCapError,
    InvalidIndexError,
    InvalidParamsError,
    InvalidWeightError,
    ModelAssumptionWarning,
    SingularConfigurationError,
)
from kzcal.operators import apply_permutation


def test_enumerate_basis_two_sites():
    assert enumerate_basis(2, WeightVector((1, 1))) == [(1, 2), (2, 1)]


def test_enumerate_basis_dimension():
    states = enumerate_basis(4, WeightVector((2, 2)))
    assert len(states) == 6  # 4!/(2!2!)


def test_enumerate_basis_single_species():
    assert enumerate_basis(3, WeightVector((3,))) == [(1, 1, 1)]


@pytest.mark.parametrize(
    "n,M",
    [(4, (2, 2)), (5, (2, 2, 1)), (6, (3, 3)), (6, (2, 2, 2)), (3, (1, 1, 1))],
)
def test_enumerate_basis_properties(n, M):
    weight = WeightVector(M)
    states = enumerate_basis(n, weight)
    # multinomial count, lexicographic order, no repeats
    expected = math.factorial(n)
    for m in M:
        expected //= math.factorial(m)
    assert len(states) == expected
    assert states == sorted(states)
    assert len(set(states)) == len(states)
    for J in states:
        assert weight_of(J, len(M)) == weight


def test_enumerate_basis_weight_mismatch():
    with pytest.raises(InvalidWeightError):
        enumerate_basis(3, WeightVector((1, 1)))


def test_dimension_cap():
    with pytest.raises(DimensionCapError):
        enumerate_basis(10, WeightVector((5, 5)), dim_cap=100)


def test_weight_of_examples():
    assert weight_of((1, 2, 1), 2) == WeightVector((2, 1))
    assert weight_of((3, 3, 3), 3) == WeightVector((0, 0, 3))
    assert weight_of((1, 2, 3), 3) == WeightVector((1, 1, 1))
    with pytest.raises(InvalidIndexError):
        weight_of((0, 1), 2)
    with pytest.raises(InvalidIndexError):
        weight_of((1, 4), 3)


def test_omega_pairing_values():
    w = WeightVector((1, 1))
    assert omega_pairing(StateVector(w, np.array([1.0, 1.0]))) == 2.0
    state = StateVector(WeightVector((2, 1)), np.array([0.5, -0.5 + 2j, 1.0]))
    assert omega_pairing(state) == pytest.approx(1 + 2j)


def test_omega_pairing_basis_states():
    w = WeightVector((2, 1))
    for J in enumerate_basis(3, w):
        assert omega_pairing(StateVector.basis_state(w, J)) == 1.0


def test_omega_pairing_permutation_invariant():
    rng = np.random.default_rng(3)
    w = WeightVector((2, 2))
    state = StateVector.random(w, rng)
    for i, j in [(1, 2), (1, 4), (2, 3)]:
        swapped = apply_permutation(i, j, state)
        assert omega_pairing(swapped) == pytest.approx(omega_pairing(state), abs=1e-14)


def test_params_coincident_coordinates():
    with pytest.raises(SingularConfigurationError, match="epsilon_x"):
        ModelParams(n=2, N=2, x=(0.5, 0.5 + 1e-10), g=(1.0, 2.0), hbar=1.0, kappa=0.1)


def test_params_zero_hbar():
    with pytest.raises(InvalidParamsError):
        ModelParams(n=2, N=2, x=(0.0, 1.0), g=(1.0, 2.0), hbar=0.0, kappa=0.1)


def test_params_duplicate_twists_strict_and_relaxed():
    with pytest.raises(InvalidParamsError):
        ModelParams(n=2, N=2, x=(0.0, 1.0), g=(1.0, 1.0), hbar=1.0, kappa=0.1)
    with pytest.warns(ModelAssumptionWarning):
        ModelParams(n=2, N=2, x=(0.0, 1.0), g=(1.0, 1.0), hbar=1.0, kappa=0.1, strict=False)


def test_params_n_below_N_warns():
    with pytest.warns(ModelAssumptionWarning, match="n=2 < N=3"):
        ModelParams(n=2, N=3, x=(0.0, 1.0), g=(1.0, 2.0, 3.0), hbar=1.0, kappa=0.1)


def test_params_trig_needs_gamma():
    with pytest.raises(InvalidParamsError):
        ModelParams(
            n=2, N=2, x=(0.0, 1.0), g=(1.0, 2.0), hbar=1.0, kappa=0.1,
            kind="trigonometric", gamma=0.0,
        )


def test_state_vector_length_checked():
    with pytest.raises(InvalidWeightError):
        StateVector(WeightVector((1, 1)), np.array([1.0, 2.0, 3.0]))


def test_basis_rank_roundtrip():
    basis = get_basis(WeightVector((2, 2, 1)))
    for k, row in enumerate(basis.states):
        assert basis.index_of(tuple(row)) == k
    with pytest.raises(InvalidIndexError):
        basis.index_of((1, 1, 1, 1, 1))  # wrong weight


def test_enumerate_basis_large_subspace():
    # multinomial count holds at the tens-of-thousands scale too
    weight = WeightVector((9, 9))
    basis = get_basis(weight)
    assert basis.dim == math.comb(18, 9)
    assert tuple(basis.states[0]) == (1,) * 9 + (2,) * 9
    assert tuple(basis.states[-1]) == (2,) * 9 + (1,) * 9
    assert np.all(np.diff(basis.codes) > 0)  # strictly increasing = lex order


def test_uniform_and_basis_state_normalization():
    w = WeightVector((2, 1))
    uni = StateVector.uniform(w)
    assert uni.norm() == pytest.approx(1.0)
    one_hot = StateVector.basis_state(w, (1, 2, 1))
    assert one_hot.amplitudes[get_basis(w).index_of((1, 2, 1))] == 1.0
    assert one_hot.norm() == 1.0
