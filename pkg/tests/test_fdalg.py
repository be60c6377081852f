import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from src.algebra.fdalg import (
    QuantumGraph,
    algebra_to_json,
    arithmetic_lemma_holds,
    block_functional,
    from_classical_graph,
    from_metric_space,
    graph_constraint_analysis,
    graph_from_matrix_units,
    inverse_trace_bounds,
    load_algebra,
    load_quantum_graph,
    make_algebra,
    matrix_algebra,
    structure_operator,
    uniform_commutative,
    verify_structure,
)
from src.algebra.operator import Operator
from src.core.errors import ArityError, FaithfulnessError, HypothesisViolation, NormalityError, ParseError, StateError

C4 = uniform_commutative(4)
C5 = uniform_commutative(5)
M2 = matrix_algebra(2)
C3_SKEW = make_algebra([(1, ["1/2"]), (1, ["1/3"]), (1, ["1/6"])])
M2_SKEW = make_algebra([(2, ["1/3", "2/3"])])


def test_make_algebra_examples():
    assert C4.is_delta_form and C4.delta == 4 and C4.is_tracial and C4.dim == 4
    assert M2.is_delta_form and M2.delta == 4 and M2.is_tracial and M2.dim == 4
    assert not C3_SKEW.is_delta_form and C3_SKEW.delta is None and C3_SKEW.is_tracial
    assert C3_SKEW.inverse_traces == (2, 3, 6)
    assert M2_SKEW.is_delta_form and M2_SKEW.delta == Fraction(9, 2) and not M2_SKEW.is_tracial


def test_make_algebra_rejects_bad_weights():
    with pytest.raises(FaithfulnessError):
        make_algebra([(1, [0]), (1, [1])])
    with pytest.raises(FaithfulnessError):
        make_algebra([(2, ["-1/2", "3/2"])])
    with pytest.raises(StateError):
        make_algebra([(1, [1]), (1, [1])])
    with pytest.raises(ArityError):
        make_algebra([(2, ["1"])])
    with pytest.raises(ParseError):
        make_algebra([(1, ["one"])])


def test_normalize_rescales_to_a_state():
    spec = make_algebra([(1, [1]), (2, [1, 3])], normalize=True)
    assert spec.is_state
    assert spec.blocks[1].q == (Fraction(1, 5), Fraction(3, 5))
    assert spec.dim == 5


def test_basis_is_orthonormal():
    for spec in (C4, M2, C3_SKEW, M2_SKEW):
        assert_allclose(block_functional(spec, 1, 1), np.eye(spec.dim), atol=1e-12)
        assert len(set(spec.basis_index)) == spec.dim


def test_multiplication_on_commutative_algebra():
    m = structure_operator(C4, "m_k", 2).matrix
    expected = np.zeros((4, 16))
    for i in range(4):
        expected[i, i * 4 + i] = 2.0
    assert_allclose(m, expected, atol=1e-12)


def test_unit_vector():
    assert_allclose(structure_operator(C4, "unit").matrix[:, 0], [0.5] * 4, atol=1e-12)
    u = M2_SKEW.unit_vector()
    assert_allclose(u, [np.sqrt(1 / 3), 0, 0, np.sqrt(2 / 3)], atol=1e-12)
    assert_allclose(structure_operator(M2_SKEW, "unit").matrix[:, 0], u, atol=1e-12)


def test_m1_is_identity_and_arity():
    assert_allclose(structure_operator(M2, "m_k", 1).matrix, np.eye(4), atol=1e-12)
    with pytest.raises(ArityError):
        structure_operator(C4, "m_k", 0)
    with pytest.raises(ParseError):
        structure_operator(C4, "comultiplication")


def test_m3_m3_star_on_c4():
    m3 = structure_operator(C4, "m_k", 3)
    assert_allclose(m3.after(m3.adjoint()).matrix, 16 * np.eye(4), atol=1e-9)


@pytest.mark.parametrize("spec", [C4, C5, M2, M2_SKEW], ids=["C4", "C5", "M2", "M2-skew"])
def test_verify_structure_on_delta_forms(spec):
    report = verify_structure(spec, k_max=5)
    assert report.passed, report.deviations
    for k in range(1, 6):
        assert report.deviations[f"m{k}_m{k}_star"] <= 1e-9


def test_verify_structure_without_delta_form():
    report = verify_structure(C3_SKEW, k_max=3)
    assert report.passed
    assert not any(key.startswith("m1_") for key in report.deviations)


def test_one_form():
    tilde = C4.one_form()
    assert tilde.total_weight == 4
    assert not tilde.is_state
    with pytest.raises(HypothesisViolation):
        C3_SKEW.one_form()


def test_classical_graphs():
    cycle = [[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]]
    g = from_classical_graph(cycle)
    assert g.algebra.delta == 4
    assert_array_equal(g.d, np.array(cycle))
    assert_array_equal(from_classical_graph(np.zeros((3, 3))).d, np.zeros((3, 3)))
    k4 = from_classical_graph(np.ones((4, 4)) - np.eye(4))
    assert_array_equal(k4.d, np.ones((4, 4)) - np.eye(4))


def test_classical_graph_input_errors():
    with pytest.raises(ArityError):
        from_classical_graph([[0, 1, 0], [1, 0, 1]])
    with pytest.raises(ParseError):
        from_classical_graph([[0, 2], [2, 0]])


def test_metric_space_graph():
    g = from_metric_space([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert g.is_normal
    with pytest.raises(ParseError):
        from_metric_space([[0, 1], [2, 0]])


@pytest.mark.parametrize(
    "d",
    [np.eye(4), np.outer(C4.unit_vector(), C4.unit_vector()), np.ones((4, 4)) - np.eye(4)],
    ids=["identity", "unit-projection", "complete-graph"],
)
def test_trivial_graphs(d):
    assert graph_constraint_analysis(QuantumGraph(C4, d)).trivial


def test_path_graph_spectral_decomposition():
    adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    report = graph_constraint_analysis(from_classical_graph(adj))
    assert not report.trivial
    assert report.normal
    assert_allclose(np.real(report.eigenvalues), [-np.sqrt(2), 0, np.sqrt(2)], atol=1e-9)
    projections = [np.asarray(p) for p in report.spectral_projections]
    assert_allclose(sum(projections), np.eye(3), atol=1e-9)
    for i, p in enumerate(projections):
        for j, q in enumerate(projections):
            assert_allclose(p @ q, p if i == j else np.zeros((3, 3)), atol=1e-9)
    assert_allclose(sum(lam * p for lam, p in zip(report.eigenvalues, projections)), adj, atol=1e-9)


def test_non_normal_graph():
    g = QuantumGraph(uniform_commutative(2), np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not g.is_normal
    assert not graph_constraint_analysis(g, spectral=False).normal
    with pytest.raises(NormalityError):
        graph_constraint_analysis(g)


def test_matrix_unit_conversion():
    g = graph_from_matrix_units(M2_SKEW, np.eye(4))
    assert_allclose(g.d, np.eye(4), atol=1e-12)
    d_e = np.arange(16, dtype=float).reshape(4, 4)
    assert_allclose(graph_from_matrix_units(C4, d_e).d, d_e, atol=1e-12)


def test_json_round_trip(tmp_path):
    for spec in (C4, M2_SKEW, C3_SKEW):
        assert load_algebra(algebra_to_json(spec)) == spec
    path = tmp_path / "graph.json"
    path.write_text(json.dumps({**algebra_to_json(C4), "d": np.eye(4).tolist()}))
    g = load_quantum_graph(path)
    assert g.algebra == C4
    assert graph_constraint_analysis(g).trivial
    with pytest.raises(ParseError):
        load_algebra(tmp_path / "missing.json")
    with pytest.raises(ParseError):
        load_quantum_graph(algebra_to_json(C4))


@settings(max_examples=300)
@given(
    st.lists(st.integers(min_value=1, max_value=100), min_size=2, max_size=8),
    st.integers(min_value=0, max_value=100),
)
def test_arithmetic_lemma(weights, slack):
    total = sum(weights) + slack
    assert arithmetic_lemma_holds([Fraction(w, total) for w in weights])


def test_arithmetic_lemma_on_many_random_tuples():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        n = int(rng.integers(2, 9))
        xs = rng.random(n) + 1e-6
        xs = xs / xs.sum() * rng.uniform(0.05, 0.99)
        assert arithmetic_lemma_holds(list(xs))


def test_arithmetic_lemma_preconditions():
    with pytest.raises(ValueError):
        arithmetic_lemma_holds([Fraction(1, 2)])
    with pytest.raises(ValueError):
        arithmetic_lemma_holds([Fraction(2, 3), Fraction(2, 3)])


blocks_strategy = st.lists(
    st.integers(min_value=1, max_value=2).flatmap(
        lambda n: st.tuples(st.just(n), st.lists(st.integers(1, 20), min_size=n, max_size=n))
    ),
    min_size=1,
    max_size=3,
)


@settings(max_examples=50, deadline=None)
@given(blocks_strategy)
def test_random_normalized_algebras(blocks):
    spec = make_algebra(blocks, normalize=True)
    assert spec.is_state
    assert all(ok for _, _, ok in inverse_trace_bounds(spec))
    report = verify_structure(spec, k_max=2)
    assert report.passed, report.deviations


def test_operator_shape_is_checked():
    with pytest.raises(ArityError):
        Operator(1, 1, 4, np.eye(3))
    with pytest.raises(ArityError):
        Operator.identity(4).after(Operator.identity(4, 2))
    with pytest.raises(ArithmeticError):
        Operator(0, 0, 4, np.array([[np.nan]]))
