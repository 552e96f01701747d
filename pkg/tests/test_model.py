import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from hybridsearch import (
    ACModel,
    CapacityError,
    Representation,
    SearchSystem,
    Storage,
    build_ac_hamiltonian,
    build_full_hamiltonian,
    build_line_hamiltonian,
    gauge_map,
)
from hybridsearch.model import (
    DENSE_MATRIX_MAX_N,
    binomial_amplitudes,
    build_hamiltonian,
    gauge_permutation,
    hamming_weights,
)
from hybridsearch.spectral import min_gap


def bits(n):
    return ["".join(b) for b in itertools.product("01", repeat=n)]


# ---------------------------------------------------------------------------
# SearchSystem / ACModel


def test_search_system_sizes():
    s = SearchSystem.full(4, "0110")
    assert s.N == 16 and s.dim == 16 and s.marked_index == 0b0110
    line = SearchSystem.line(4)
    assert line.N == 16 and line.dim == 5 and line.marked_index == 0
    assert line.representation is Representation.SYMMETRIC_LINE


def test_line_requires_gauge_fixed_label():
    with pytest.raises(ValueError):
        SearchSystem(3, "010", Representation.SYMMETRIC_LINE)


@pytest.mark.parametrize("marked", ["01", "0102", ""])
def test_bad_marked_label(marked):
    with pytest.raises(ValueError):
        SearchSystem.full(3, marked)


def test_capacity_caps():
    with pytest.raises(CapacityError):
        SearchSystem.full(15)
    with pytest.raises(CapacityError):
        SearchSystem.line(201)
    SearchSystem.line(200)


def test_initial_states_normalised():
    full = SearchSystem.full(5)
    assert np.allclose(full.initial_state(), 2**-2.5)
    amp = binomial_amplitudes(5)
    assert np.allclose(SearchSystem.line(5).initial_state(), amp)
    assert np.isclose(amp @ amp, 1.0, atol=1e-15)


def test_ac_model_validation():
    with pytest.raises(ValueError):
        ACModel(0.0)
    with pytest.raises(ValueError):
        ACModel(0.1, q=np.inf)
    assert ACModel(0.1).shifted(0.3).q == 0.3


# ---------------------------------------------------------------------------
# full hypercube


def test_full_n1_driver():
    H = build_full_hamiltonian(SearchSystem.full(1, "0"), 1.0, 0.0)
    assert H.storage is Storage.DENSE_SYMMETRIC
    np.testing.assert_allclose(H.to_dense(), [[0.5, -0.5], [-0.5, 0.5]])
    np.testing.assert_allclose(H.eigvalsh(), [0.0, 1.0], atol=1e-15)


def test_full_problem_term_only():
    H = build_full_hamiltonian(SearchSystem.full(3, "110"), 0.0, 1.0).to_dense()
    expected = np.ones(8)
    expected[0b110] = 0.0
    np.testing.assert_array_equal(H, np.diag(expected))


def test_full_driver_spectrum_is_binomial():
    w = build_full_hamiltonian(SearchSystem.full(4), 1.0, 0.0).eigvalsh()
    expected = np.repeat(np.arange(5), [1, 4, 6, 4, 1])
    np.testing.assert_allclose(w, expected, atol=1e-12)


def test_negative_coefficient_rejected():
    with pytest.raises(ValueError):
        build_full_hamiltonian(SearchSystem.full(2), -0.1, 1.0)
    with pytest.raises(ValueError):
        build_line_hamiltonian(SearchSystem.line(2), 1.0, -1.0)


def test_dense_matrix_cap():
    with pytest.raises(CapacityError):
        build_full_hamiltonian(SearchSystem.full(DENSE_MATRIX_MAX_N + 1), 1.0, 1.0)


def test_full_and_line_agree_at_gap_minimum():
    s_m = min_gap(5).s_m
    full = build_full_hamiltonian(SearchSystem.full(5, "10011"), 1 - s_m, s_m).eigvalsh()
    line = build_line_hamiltonian(SearchSystem.line(5), 1 - s_m, s_m).eigvalsh()
    np.testing.assert_allclose(full[:2], line[:2], atol=1e-10)


# ---------------------------------------------------------------------------
# line


def test_line_driver_spectrum():
    H = build_line_hamiltonian(SearchSystem.line(4), 1.0, 0.0)
    assert H.storage is Storage.SYMMETRIC_TRIDIAGONAL
    np.testing.assert_allclose(H.eigvalsh(), np.arange(5), atol=1e-12)


def test_line_problem_term():
    H = build_line_hamiltonian(SearchSystem.line(4), 0.0, 1.0)
    np.testing.assert_array_equal(H.to_dense(), np.diag([0.0, 1, 1, 1, 1]))


def test_line_driver_ground_vector_is_binomial():
    w, V = build_line_hamiltonian(SearchSystem.line(9), 1.0, 0.0).eigh()
    overlap = abs(V[:, 0] @ binomial_amplitudes(9)) ** 2
    assert overlap >= 1 - 1e-12


def test_full_driver_ground_vector_is_uniform():
    w, V = build_full_hamiltonian(SearchSystem.full(6), 1.0, 0.0).eigh()
    assert abs(V[:, 0] @ np.full(64, 1 / 8)) ** 2 >= 1 - 1e-12


def test_line_min_gap_matches_full_n9():
    line = min_gap(SearchSystem.line(9))
    full = build_full_hamiltonian(SearchSystem.full(9, "101100111"), 1 - line.s_m, line.s_m)
    w = full.eigvalsh()
    assert abs((w[1] - w[0]) - line.g_min) < 1e-10


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 10), s=st.floats(0, 1))
def test_line_spectrum_subset_of_full(n, s):
    line = build_line_hamiltonian(SearchSystem.line(n), 1 - s, s).eigvalsh()
    full = eigh(build_full_hamiltonian(SearchSystem.full(n), 1 - s, s).data, eigvals_only=True)
    dist = np.min(np.abs(line[:, None] - full[None, :]), axis=1)
    assert dist.max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 8), a=st.floats(0, 3), b=st.floats(0, 3))
def test_matrices_are_symmetric(n, a, b):
    for system in (SearchSystem.full(n), SearchSystem.line(n)):
        H = build_hamiltonian(system, a, b)
        assert H.is_symmetric()
        D = H.to_dense()
        assert np.array_equal(D, D.T)


# ---------------------------------------------------------------------------
# avoided-crossing model


def test_ac_gap_at_half():
    w = build_ac_hamiltonian(ACModel(0.1), 0.5).eigvalsh()
    assert np.isclose(w[1] - w[0], 0.1, rtol=1e-12)
    w = build_ac_hamiltonian(ACModel(0.05), 0.5).eigvalsh()
    assert np.isclose(w[1] - w[0], 0.05, rtol=1e-12)


def test_ac_gap_at_endpoints():
    w = build_ac_hamiltonian(ACModel(0.1), 0.0).eigvalsh()
    assert np.isclose(w[1] - w[0], np.sqrt(1 + 4 * 0.01))
    H = build_ac_hamiltonian(ACModel(0.1), 1.0).to_dense()
    assert H[0, 1] == 0 and np.isclose(abs(H[0, 0] - H[1, 1]), 1.0)


def test_ac_shift_moves_crossing():
    # the shift adds (q/2) g sigma_z; the crossing sits where the diagonal splits vanish
    q, g = 0.4, 0.05
    model = ACModel(g, q)
    s_star = 0.5 * (1 + q * g)
    H = build_ac_hamiltonian(model, s_star).to_dense()
    assert np.isclose(H[0, 0], H[1, 1])


def test_ac_schedule_value_checked():
    with pytest.raises(ValueError):
        build_ac_hamiltonian(ACModel(0.1), 1.5)


# ---------------------------------------------------------------------------
# gauge


def test_gauge_identity_and_xor():
    ident = gauge_map("000")
    assert all(ident(v) == v for v in bits(3))
    assert gauge_map("101")("111") == "010"
    assert gauge_map("101")(0b111) == 0b010


def test_gauge_length_mismatch():
    with pytest.raises(ValueError):
        gauge_map("101", 4)


def test_gauge_permutation_conjugates_problem_term():
    m = "1101"
    system = SearchSystem.full(4, m)
    P = gauge_permutation(m)
    H = build_full_hamiltonian(system, 0.3, 0.7).to_dense()
    H0 = build_full_hamiltonian(SearchSystem.full(4), 0.3, 0.7).to_dense()
    np.testing.assert_allclose(H[np.ix_(P, P)], H0, atol=0)
    assert hamming_weights(4, m)[int(m, 2)] == 0
