import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiabatic_lab.opalg import (
    CoherenceVector,
    OperatorBasis,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dagger,
    from_coherence_vector,
    hs_inner,
    is_density_matrix,
    is_hermitian,
    is_unitary,
    pauli_basis,
    superoperator_matrix,
    to_coherence_vector,
)

RNG = np.random.default_rng(20260815)


def random_density(dim: int, rng=RNG) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ dagger(a)
    return rho / np.trace(rho)


def test_pauli_basis_orthogonality_one_and_two_qubits():
    for n in (1, 2):
        basis = pauli_basis(n)
        basis.validate_orthogonality()
        assert basis.labels[0] == "I" * n
        assert len(basis.elements) == 4**n


def test_pauli_basis_guard():
    with pytest.raises(ValueError):
        pauli_basis(0)
    with pytest.raises(ValueError):
        pauli_basis(5)
    # explicit cap raise is allowed
    assert pauli_basis(2, max_qubits=2).dim == 4


def test_basis_rejects_non_identity_first():
    with pytest.raises(ValueError):
        OperatorBasis(dim=2, elements=(SIGMA_X, SIGMA_Y, SIGMA_Z, np.eye(2)),
                      labels=("X", "Y", "Z", "I"))


def test_coherence_roundtrip_identity_component():
    basis = pauli_basis(1)
    rho = random_density(2)
    vec = to_coherence_vector(rho, basis)
    assert abs(vec.components[0] - 1.0) < 1e-12
    back = from_coherence_vector(vec)
    assert np.max(np.abs(back - rho)) < 1e-12


def test_coherence_roundtrip_general_operator():
    basis = pauli_basis(2)
    op = RNG.normal(size=(4, 4)) + 1j * RNG.normal(size=(4, 4))
    vec = to_coherence_vector(op, basis)
    back = from_coherence_vector(vec, normalize_trace=False)
    assert np.max(np.abs(back - op)) < 1e-12


def test_hs_inner_purity_values():
    basis = pauli_basis(1)
    pure = to_coherence_vector(np.array([[1, 0], [0, 0]], dtype=complex), basis)
    mixed = to_coherence_vector(0.5 * np.eye(2, dtype=complex), basis)
    assert abs(hs_inner(pure, pure) - 1.0) < 1e-12
    assert abs(hs_inner(mixed, mixed) - 0.5) < 1e-12


def test_hs_inner_matches_trace_pairing():
    basis = pauli_basis(2)
    a = random_density(4)
    b = random_density(4)
    got = hs_inner(to_coherence_vector(a, basis), to_coherence_vector(b, basis))
    want = np.trace(dagger(a) @ b)
    assert abs(got - want) < 1e-12


def test_superoperator_commutator_matrix_and_trace_row():
    basis = pauli_basis(1)
    h = 0.3 * SIGMA_Z + 0.7 * SIGMA_X

    sup = superoperator_matrix(lambda op: -1j * (h @ op - op @ h), basis)
    assert sup.trace_preserving
    # -i[H, .] with H = a Z + b X in the (I,X,Y,Z) component basis
    want = np.zeros((4, 4))
    want[1, 2], want[2, 1] = -2 * 0.3, 2 * 0.3  # Z part rotates x <-> y
    want[2, 3], want[3, 2] = -2 * 0.7, 2 * 0.7  # X part rotates y <-> z
    assert np.max(np.abs(sup.matrix - want)) < 1e-12


def test_superoperator_application_matches_direct_action():
    basis = pauli_basis(1)
    h = 0.4 * SIGMA_Y + 1.1 * SIGMA_Z

    def gen(op):
        return -1j * (h @ op - op @ h) + 0.2 * (SIGMA_Z @ op @ SIGMA_Z - op)

    sup = superoperator_matrix(gen, basis)
    rho = random_density(2)
    image_vec = sup.apply(to_coherence_vector(rho, basis))
    back = from_coherence_vector(image_vec, normalize_trace=False)
    assert np.max(np.abs(back - gen(rho))) < 1e-10


def test_superoperator_rejects_nonlinear_map():
    basis = pauli_basis(1)
    with pytest.raises(ValueError, match="linearity"):
        superoperator_matrix(lambda op: op @ op, basis)


def test_density_matrix_detector():
    assert is_density_matrix(random_density(3))
    assert not is_density_matrix(np.eye(2))  # trace 2
    assert not is_density_matrix(np.array([[1.5, 0], [0, -0.5]]))  # negative
    assert not is_density_matrix(np.array([[0.5, 0.5], [0.0, 0.5]]))  # non-Hermitian


def test_unitary_and_hermitian_detectors():
    assert is_hermitian(SIGMA_Y)
    assert not is_hermitian(SIGMA_X + 1j * np.eye(2))
    assert is_unitary(SIGMA_X)
    assert not is_unitary(2.0 * np.eye(2))


def test_vector_shape_validation():
    basis = pauli_basis(1)
    with pytest.raises(ValueError):
        CoherenceVector(np.zeros(3), basis)
    with pytest.raises(ValueError):
        to_coherence_vector(np.eye(3), basis)


def test_basis_mismatch_rejected():
    b1, b2 = pauli_basis(1), pauli_basis(2)
    v1 = to_coherence_vector(0.5 * np.eye(2, dtype=complex), b1)
    v2 = to_coherence_vector(0.25 * np.eye(4, dtype=complex), b2)
    with pytest.raises(ValueError):
        hs_inner(v1, v2)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    basis = pauli_basis(1)
    rho = random_density(2, rng)
    back = from_coherence_vector(to_coherence_vector(rho, basis))
    assert np.max(np.abs(back - rho)) < 1e-12
    assert is_density_matrix(back)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_lindblad_superoperator_trace_row_property(seed):
    """Any (H, single jump) generator must produce a vanishing identity row."""
    rng = np.random.default_rng(seed)
    basis = pauli_basis(1)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = 0.5 * (a + dagger(a))
    j = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))

    def gen(op):
        jd = dagger(j)
        return -1j * (h @ op - op @ h) + j @ op @ jd - 0.5 * (jd @ j @ op + op @ jd @ j)

    assert superoperator_matrix(gen, basis).trace_preserving
