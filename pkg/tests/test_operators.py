import numpy as np
import pytest

from kzcal.core import ModelParams, StateVector, WeightVector, get_basis, omega_pairing
from kzcal.errors import InvalidSitesError, UnsupportedOrderError
from kzcal.operators import (
    LinearOperator,
    apply_permutation,
    apply_site_matrix,
    apply_T,
    apply_twist,
    gaudin_derivative,
    gaudin_hamiltonian,
    permutation_operator,
    t_operator,
    twist_operator,
    weight_operator,
)

from oracles import gaudin_full, permutation_full, restrict, t_full, twist_full

HAND = ModelParams(n=2, N=2, x=(0.0, 1.0), g=(1.0, 2.0), hbar=1.0, kappa=0.1)
W11 = WeightVector((1, 1))


def rational_instance(n=4, N=2, kappa=0.3, hbar=1.0):
    x = tuple(0.0 + 1.1 * k + 0.05 * k * k for k in range(n))
    g = tuple(1.0 + 0.9 * a for a in range(N))
    return ModelParams(n=n, N=N, x=x, g=g, hbar=hbar, kappa=kappa)


def trig_instance(n=4, N=2, kappa=0.3, gamma=0.7, hbar=1.0):
    return rational_instance(n, N, kappa, hbar).replace(kind="trigonometric", gamma=gamma)


# -- hand examples -------------------------------------------------------------


def test_gaudin_hand_matrices():
    H1 = gaudin_hamiltonian(1, HAND, W11).materialize().toarray()
    H2 = gaudin_hamiltonian(2, HAND, W11).materialize().toarray()
    np.testing.assert_allclose(H1, [[1.0, -0.1], [-0.1, 2.0]], atol=1e-15)
    np.testing.assert_allclose(H2, [[2.0, 0.1], [0.1, 1.0]], atol=1e-15)
    np.testing.assert_allclose(H1 + H2, 3.0 * np.eye(2), atol=1e-15)


def test_gaudin_derivative_hand():
    d = gaudin_derivative(1, 1, 1, HAND, W11).materialize().toarray()
    np.testing.assert_allclose(d, [[0.0, -0.1], [-0.1, 0.0]], atol=1e-16)


def test_permutation_swap_and_involution():
    state = StateVector(W11, np.array([1.0, 0.0]))
    swapped = apply_permutation(1, 2, state)
    np.testing.assert_allclose(swapped.amplitudes, [0.0, 1.0])
    back = apply_permutation(1, 2, swapped)
    np.testing.assert_allclose(back.amplitudes, state.amplitudes)


def test_t_action_cases():
    # letters (1,2): raise, (2,1): lower with sign, equal letters annihilate
    st12 = StateVector.basis_state(W11, (1, 2))
    np.testing.assert_array_equal(apply_T(1, 2, st12).amplitudes, [0.0, 1.0])
    st21 = StateVector.basis_state(W11, (2, 1))
    np.testing.assert_array_equal(apply_T(1, 2, st21).amplitudes, [-1.0, 0.0])
    w2 = WeightVector((2,))
    st11 = StateVector.basis_state(w2, (1, 1))
    np.testing.assert_array_equal(apply_T(1, 2, st11).amplitudes, [0.0])


def test_t_antisymmetry():
    rng = np.random.default_rng(0)
    w = WeightVector((2, 2))
    state = StateVector.random(w, rng)
    a = apply_T(1, 3, state).amplitudes
    b = apply_T(3, 1, state).amplitudes
    np.testing.assert_allclose(a, -b, atol=1e-15)


def test_t_square_case_analysis():
    w = WeightVector((2, 1))
    basis = get_basis(w)
    for k, J in enumerate(basis.states):
        state = StateVector.basis_state(w, tuple(J))
        out = apply_T(1, 3, apply_T(1, 3, state)).amplitudes
        expected = np.zeros(basis.dim)
        if J[0] != J[2]:
            expected[k] = -1.0
        np.testing.assert_array_equal(out, expected)


def test_twist_examples():
    state = StateVector.basis_state(W11, (1, 2))
    np.testing.assert_allclose(apply_twist(1, state, HAND).amplitudes, state.amplitudes * 1.0)
    np.testing.assert_allclose(apply_twist(2, state, HAND).amplitudes, state.amplitudes * 2.0)


def test_total_twist_counts_letters():
    params = rational_instance(n=5, N=3)
    w = WeightVector((2, 2, 1))
    expected = 2 * params.g[0] + 2 * params.g[1] + 1 * params.g[2]
    for J in [(1, 1, 2, 2, 3), (3, 2, 1, 2, 1)]:
        state = StateVector.basis_state(w, J)
        total = sum(
            apply_twist(i, state, params).amplitudes for i in range(1, 6)
        )
        np.testing.assert_allclose(total, expected * state.amplitudes, atol=1e-14)


def test_twist_permutation_intertwining():
    # g^(i) P_ij = P_ij g^(j)
    rng = np.random.default_rng(1)
    params = rational_instance(n=4, N=2)
    w = WeightVector((2, 2))
    state = StateVector.random(w, rng)
    for i, j in [(1, 2), (2, 4), (1, 3)]:
        lhs = apply_twist(i, apply_permutation(i, j, state), params).amplitudes
        rhs = apply_permutation(i, j, apply_twist(j, state, params)).amplitudes
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_twist_t_mixed_identity():
    # (g^(i) - g^(j)) T_ij + T_ij (g^(i) - g^(j)) = 0
    rng = np.random.default_rng(2)
    params = rational_instance(n=4, N=3)
    w = WeightVector((2, 1, 1))
    state = StateVector.random(w, rng)
    for i, j in [(1, 2), (3, 4), (2, 3)]:
        def gdiff(s):
            a = apply_twist(i, s, params).amplitudes - apply_twist(j, s, params).amplitudes
            return StateVector(w, a)

        lhs = gdiff(apply_T(i, j, state)).amplitudes + apply_T(i, j, gdiff(state)).amplitudes
        np.testing.assert_allclose(lhs, 0.0, atol=1e-13)


def test_omega_absorbs_permutation():
    rng = np.random.default_rng(4)
    w = WeightVector((2, 2))
    state = StateVector.random(w, rng)
    for i, j in [(1, 2), (2, 3), (1, 4)]:
        assert omega_pairing(apply_permutation(i, j, state)) == pytest.approx(
            omega_pairing(state), abs=1e-14
        )


# -- site matrices -------------------------------------------------------------


def test_site_matrix_projector():
    state = StateVector.basis_state(W11, (1, 2))
    out = apply_site_matrix(1, 1, 1, state)
    np.testing.assert_array_equal(out.amplitudes, state.amplitudes)


def test_site_matrix_raising():
    w = WeightVector((0, 2))
    state = StateVector.basis_state(w, (2, 2))
    out = apply_site_matrix(1, 1, 2, state)
    assert out.weight == WeightVector((1, 1))
    np.testing.assert_array_equal(
        out.amplitudes, StateVector.basis_state(WeightVector((1, 1)), (1, 2)).amplitudes
    )


def test_site_matrix_annihilates():
    state = StateVector.basis_state(W11, (1, 2))
    out = apply_site_matrix(1, 1, 2, state)  # site 1 holds letter 1, not 2
    assert out.weight == WeightVector((2, 0))
    np.testing.assert_array_equal(out.amplitudes, 0.0)


def test_site_matrix_empty_target():
    w = WeightVector((2, 0))
    state = StateVector.basis_state(w, (1, 1))
    out = apply_site_matrix(1, 1, 2, state)  # no letter 2 anywhere
    np.testing.assert_array_equal(out.amplitudes, 0.0)


# -- weight operators ----------------------------------------------------------


def test_weight_operator_scalar_on_sector():
    w = WeightVector((2, 2, 1))
    for a, expected in [(1, 2.0), (2, 2.0), (3, 1.0)]:
        op = weight_operator(a, w)
        v = np.linspace(1, 2, w.dimension())
        np.testing.assert_allclose(op.matvec(v), expected * v)


def test_weight_operators_sum_to_n():
    w = WeightVector((2, 2, 1))
    v = np.ones(w.dimension())
    total = sum(weight_operator(a, w).matvec(v) for a in (1, 2, 3))
    np.testing.assert_allclose(total, 5.0 * v)


@pytest.mark.parametrize("make", [rational_instance, trig_instance])
def test_hamiltonians_sum_to_twist_weight(make):
    params = make(n=5, N=3)
    w = WeightVector((2, 2, 1))
    rng = np.random.default_rng(5)
    v = StateVector.random(w, rng).amplitudes
    total = sum(
        gaudin_hamiltonian(i, params, w).matvec(v) for i in range(1, 6)
    )
    expected = sum(m * g for m, g in zip(w.M, params.g))
    np.testing.assert_allclose(total, expected * v, atol=1e-12)


# -- dense Kronecker oracle ----------------------------------------------------


@pytest.mark.parametrize("n,N,M", [(3, 2, (2, 1)), (4, 2, (2, 2)), (3, 3, (1, 1, 1))])
def test_permutation_matches_kron_oracle(n, N, M):
    w = WeightVector(M)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            ours = permutation_operator(i, j, w).materialize().toarray()
            full = restrict(permutation_full(N, n, i, j), w)
            np.testing.assert_array_equal(ours, full)


@pytest.mark.parametrize("n,N,M", [(3, 2, (2, 1)), (4, 2, (2, 2)), (3, 3, (1, 1, 1))])
def test_t_matches_kron_oracle(n, N, M):
    w = WeightVector(M)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            ours = t_operator(i, j, w).materialize().toarray()
            full = restrict(t_full(N, n, i, j), w)
            np.testing.assert_array_equal(ours, full)


@pytest.mark.parametrize("kind", ["rational", "trigonometric"])
@pytest.mark.parametrize("n,N,M", [(3, 2, (2, 1)), (4, 3, (2, 1, 1))])
def test_gaudin_matches_kron_oracle(kind, n, N, M):
    params = rational_instance(n, N) if kind == "rational" else trig_instance(n, N)
    w = WeightVector(M)
    for i in range(1, n + 1):
        ours = gaudin_hamiltonian(i, params, w).materialize().toarray()
        full = restrict(gaudin_full(params, i), w)
        np.testing.assert_allclose(ours, full, atol=1e-14)


def test_twist_matches_kron_oracle():
    params = rational_instance(3, 2)
    w = WeightVector((2, 1))
    for i in (1, 2, 3):
        ours = twist_operator(i, params, w).materialize().toarray()
        full = restrict(twist_full(2, 3, i, params.g), w)
        np.testing.assert_array_equal(ours, full)


# -- commuting family ----------------------------------------------------------


@pytest.mark.parametrize("make", [rational_instance, trig_instance])
def test_hamiltonians_commute(make):
    params = make(n=5, N=3, kappa=0.45)
    w = WeightVector((2, 2, 1))
    rng = np.random.default_rng(6)
    v = StateVector.random(w, rng).amplitudes
    ops = [gaudin_hamiltonian(i, params, w) for i in range(1, 6)]
    for i in range(5):
        for j in range(i + 1, 5):
            comm = ops[i].matvec(ops[j].matvec(v)) - ops[j].matvec(ops[i].matvec(v))
            assert np.linalg.norm(comm) < 1e-12


@pytest.mark.parametrize("make", [rational_instance, trig_instance])
def test_hamiltonians_commute_with_weights(make):
    params = make(n=4, N=2)
    w = WeightVector((2, 2))
    rng = np.random.default_rng(7)
    v = StateVector.random(w, rng).amplitudes
    for i in range(1, 5):
        H = gaudin_hamiltonian(i, params, w)
        for a in (1, 2):
            Ma = weight_operator(a, w)
            comm = H.matvec(Ma.matvec(v)) - Ma.matvec(H.matvec(v))
            np.testing.assert_allclose(comm, 0.0, atol=1e-12)


# -- derivatives ---------------------------------------------------------------


@pytest.mark.parametrize("make", [rational_instance, trig_instance])
@pytest.mark.parametrize("order", [1, 2])
def test_derivative_matches_finite_difference(make, order):
    params = make(n=4, N=2, kappa=0.35)
    w = WeightVector((2, 2))
    # the second difference divides by h^2, so h = 1e-5 would sit at the
    # float64 roundoff floor; 3e-4 balances roundoff against truncation
    h = 1e-5 if order == 1 else 3e-4
    for i in (1, 3):
        for j in (1, 2, 3):
            analytic = gaudin_derivative(i, j, order, params, w).materialize().toarray()
            x = np.asarray(params.x)

            def ham(xs):
                return gaudin_hamiltonian(i, params.replace(x=tuple(xs)), w).materialize().toarray()

            xp, xm = x.copy(), x.copy()
            xp[j - 1] += h
            xm[j - 1] -= h
            if order == 1:
                fd = (ham(xp) - ham(xm)) / (2 * h)
            else:
                fd = (ham(xp) - 2 * ham(x) + ham(xm)) / h**2
            scale = max(np.max(np.abs(analytic)), 1e-3)
            assert np.max(np.abs(fd - analytic)) / scale < 1e-6


@pytest.mark.parametrize("make", [rational_instance, trig_instance])
def test_derivative_symmetry(make):
    # d H_i / d x_j = d H_j / d x_i, the zero-curvature symmetry
    params = make(n=4, N=2)
    w = WeightVector((2, 2))
    for i in (1, 2):
        for j in (3, 4):
            a = gaudin_derivative(i, j, 1, params, w).materialize().toarray()
            b = gaudin_derivative(j, i, 1, params, w).materialize().toarray()
            np.testing.assert_allclose(a, b, atol=1e-12)


def test_unsupported_derivative_order():
    with pytest.raises(UnsupportedOrderError):
        gaudin_derivative(1, 1, 3, HAND, W11)


def test_invalid_sites():
    state = StateVector.uniform(W11)
    with pytest.raises(InvalidSitesError):
        apply_permutation(1, 1, state)
    with pytest.raises(InvalidSitesError):
        apply_T(0, 2, state)


# -- operator plumbing ---------------------------------------------------------


def test_linearity_and_materialize_agree():
    params = trig_instance(n=4, N=3)
    w = WeightVector((2, 1, 1))
    op = gaudin_hamiltonian(2, params, w)
    mat = op.materialize()
    rng = np.random.default_rng(8)
    for _ in range(4):
        u = StateVector.random(w, rng).amplitudes
        v = StateVector.random(w, rng).amplitudes
        a, b = rng.standard_normal(2)
        np.testing.assert_allclose(
            op.matvec(a * u + b * v), a * op.matvec(u) + b * op.matvec(v), atol=1e-13
        )
        np.testing.assert_allclose(op.matvec(u), mat @ u, atol=1e-13)


def test_rmatvec_is_transpose():
    params = trig_instance(n=4, N=2)
    w = WeightVector((2, 2))
    op = gaudin_hamiltonian(1, params, w)
    dense = op.materialize().toarray()
    rng = np.random.default_rng(9)
    v = rng.standard_normal(w.dimension())
    np.testing.assert_allclose(op.rmatvec(v), dense.T @ v, atol=1e-13)


def test_operator_algebra_against_dense():
    params = rational_instance(n=3, N=2)
    w = WeightVector((2, 1))
    A = gaudin_hamiltonian(1, params, w)
    B = gaudin_hamiltonian(2, params, w)
    dA = A.materialize().toarray()
    dB = B.materialize().toarray()
    rng = np.random.default_rng(10)
    v = rng.standard_normal(w.dimension())
    np.testing.assert_allclose((A + B).matvec(v), (dA + dB) @ v, atol=1e-13)
    np.testing.assert_allclose((2.5 * A).matvec(v), 2.5 * dA @ v, atol=1e-13)
    np.testing.assert_allclose((A @ B).matvec(v), dA @ (dB @ v), atol=1e-13)
    np.testing.assert_allclose((A @ B).rmatvec(v), (dA @ dB).T @ v, atol=1e-13)
    np.testing.assert_allclose(LinearOperator.identity(w).matvec(v), v)


def test_max_abs_norm_paths():
    params = rational_instance(n=3, N=2, kappa=0.4)
    w = WeightVector((2, 1))
    op = gaudin_hamiltonian(1, params, w)
    dense = np.abs(op.materialize().toarray()).max()
    assert op.max_abs_norm() == pytest.approx(dense)
    # sampled bound on the generic (composition) path stays below the product
    squared = op @ op
    assert squared.max_abs_norm() <= (dense * w.dimension()) ** 2


def test_materialization_cache_roundtrip(tmp_path, monkeypatch):
    from kzcal.operators import materialize_hamiltonian

    monkeypatch.setenv("KZCAL_CACHE_DIR", str(tmp_path))
    params = rational_instance(n=4, N=2)
    w = WeightVector((2, 2))
    first = materialize_hamiltonian(2, params, w)
    cached_files = list(tmp_path.glob("H_*.npz"))
    assert len(cached_files) == 1
    second = materialize_hamiltonian(2, params, w)
    assert (first != second).nnz == 0
    assert len(list(tmp_path.glob("H_*.npz"))) == 1


def test_trig_to_rational_limit():
    params = rational_instance(n=4, N=2, kappa=0.4)
    w = WeightVector((2, 2))
    rat = [gaudin_hamiltonian(i, params, w).materialize().toarray() for i in range(1, 5)]
    gamma = 1e-4
    trig = params.replace(kind="trigonometric", gamma=gamma)
    worst = 0.0
    for i in range(1, 5):
        diff = gaudin_hamiltonian(i, trig, w).materialize().toarray() - rat[i - 1]
        worst = max(worst, np.max(np.abs(diff)))
    assert worst < 10 * gamma * params.kappa * params.n
    assert worst > 0.0
