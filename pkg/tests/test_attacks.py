import numpy as np
import pytest

from lqkd import qmath
from lqkd.attacks import (
    AttackConfigError,
    AttackSpec,
    MeasureResendScenario,
    ReflectScenario,
    analytic_two_way_detection,
    attack_components,
    attack_from_dict,
    cloning_isometry,
    detection_probability_intercept,
    entangle_measure_unitary,
    intercept_detection_frequency,
    intercept_resend,
    random_unitary,
    resolve_unitary,
    simulate_reflect_distribution,
    two_way_attack,
)
from lqkd.qmath import Basis, basis_ket, fourier_ket, product_state

RT2 = 1.0 / np.sqrt(2)


# --- intercept-resend -------------------------------------------------------


def test_intercept_resend_matching_basis_is_transparent():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(100):
        forwarded, outcome, basis = intercept_resend(basis_ket(2, 0), rng)
        seen.add(basis)
        if basis is Basis.COMPUTATIONAL:
            assert outcome == 0
            assert np.allclose(forwarded.amplitudes, basis_ket(2, 0).amplitudes)
    assert seen == {Basis.COMPUTATIONAL, Basis.FOURIER}


def test_intercept_resend_disturbs_conjugate_states():
    # |+> intercepted in the computational basis errs half the time when
    # the recipient measures in the conjugate basis
    rng = np.random.default_rng(1)
    n, errors, mismatched = 40_000, 0, 0
    for _ in range(n):
        forwarded, _, basis = intercept_resend(fourier_ket(2, 0), rng)
        if basis is Basis.FOURIER:
            continue
        mismatched += 1
        outcome, _ = qmath.measure(forwarded, Basis.FOURIER, rng)
        errors += outcome != 0
    rate = errors / mismatched
    sigma = np.sqrt(0.25 / mismatched)
    assert abs(rate - 0.5) < 3 * sigma


def test_detection_probability_values():
    for l in range(0, 11):
        assert detection_probability_intercept(2, l) == pytest.approx(1 - 0.5**l, abs=1e-15)
        assert detection_probability_intercept(4, l) == pytest.approx(1 - 0.25**l, abs=1e-15)
    assert detection_probability_intercept(4, 0) == 0.0


def test_detection_probability_rejects_bad_args():
    with pytest.raises(ValueError):
        detection_probability_intercept(1, 3)
    with pytest.raises(ValueError):
        detection_probability_intercept(2, -1)


def test_intercept_detection_frequency_smoke():
    rng = np.random.default_rng(42)
    freq = intercept_detection_frequency(2, 3, 4000, rng)
    expected = 1 - 0.5**3
    assert abs(freq - expected) < 4 * np.sqrt(expected * (1 - expected) / 4000)


# --- entangle-and-measure ---------------------------------------------------


def test_entangler_is_cnot_for_qubits():
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    assert np.allclose(entangle_measure_unitary(2), cnot)


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_entangler_is_unitary_and_copies_basis_states(d):
    u = entangle_measure_unitary(d)
    assert qmath.is_unitary(u)
    for i in range(d):
        state = product_state([basis_ket(d, i), basis_ket(d, 0)])
        out = qmath.apply_joint(u, state, (0, 1))
        expected = product_state([basis_ket(d, i), basis_ket(d, i)])
        assert np.allclose(out.amplitudes, expected.amplitudes)


def test_entangler_turns_plus_into_bell_pair():
    state = product_state([fourier_ket(2, 0), basis_ket(2, 0)])
    out = qmath.apply_joint(entangle_measure_unitary(2), state, (0, 1))
    assert np.allclose(out.amplitudes, [RT2, 0, 0, RT2], atol=1e-14)


@pytest.mark.parametrize("d,expected_error", [(2, 0.5), (4, 0.75)])
def test_entangler_error_rate_on_conjugate_states(d, expected_error):
    # exact Born marginal of the recipient's conjugate-basis measurement
    u = entangle_measure_unitary(d)
    for m in range(d):
        state = product_state([fourier_ket(d, m), basis_ket(d, 0)])
        out = qmath.apply_joint(u, state, (0, 1))
        probs = qmath.subsystem_distribution(out, 0, Basis.FOURIER)
        assert abs((1.0 - probs[m]) - expected_error) < 1e-12


# --- cloning ----------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_cloning_isometry_preserves_norm(d):
    for fidelity in np.linspace(0.0, 1.0, 11):
        v = cloning_isometry(d, fidelity)
        gram = v.conj().T @ v
        assert np.max(np.abs(gram - np.eye(d))) < 1e-10


def test_cloning_perfect_fidelity_is_transparent_on_computational_states():
    v = cloning_isometry(2, 1.0)
    for i in range(2):
        out = v @ basis_ket(2, i).amplitudes
        joint = qmath.JointState((2, 4), out)
        probs = qmath.subsystem_distribution(joint, 0, Basis.COMPUTATIONAL)
        assert probs[i] == pytest.approx(1.0, abs=1e-12)


def test_cloning_error_rate_matches_one_minus_f():
    v = cloning_isometry(4, 0.9)
    for i in range(4):
        joint = qmath.JointState((4, 16), v @ basis_ket(4, i).amplitudes)
        probs = qmath.subsystem_distribution(joint, 0, Basis.COMPUTATIONAL)
        assert 1.0 - probs[i] == pytest.approx(0.1, abs=1e-12)


def test_cloning_rejects_bad_fidelity():
    with pytest.raises(ValueError):
        cloning_isometry(2, 1.5)
    with pytest.raises(ValueError):
        cloning_isometry(2, -0.1)


# --- two-way attacks --------------------------------------------------------


def _cnot_identity_components():
    return two_way_attack(entangle_measure_unitary(2), np.eye(4, dtype=complex), 2)


def test_components_of_cnot_forward_leg():
    comp = _cnot_identity_components()
    e = comp.forward
    assert np.allclose(e[0, 0], [1, 0]) and np.allclose(e[0, 1], [0, 0])
    assert np.allclose(e[1, 0], [0, 0]) and np.allclose(e[1, 1], [0, 1])
    f = comp.backward
    for i in range(2):
        for j in range(2):
            expected = [1, 0] if i == j else [0, 0]
            assert np.allclose(f[i, j], expected)


def test_component_sum_rules_random_unitaries():
    rng = np.random.default_rng(9)
    for d in (2, 4):
        comp = two_way_attack(random_unitary(d * d, rng), random_unitary(d * d, rng), d)
        for leg in (comp.forward, comp.backward):
            sums = np.array([sum(np.sum(np.abs(leg[i, j]) ** 2) for j in range(d)) for i in range(d)])
            assert np.max(np.abs(sums - 1.0)) < 1e-10


def test_identity_attack_is_undetectable():
    comp = two_way_attack(np.eye(4, dtype=complex), np.eye(4, dtype=complex), 2)
    for i in range(2):
        assert analytic_two_way_detection(comp, ReflectScenario(Basis.COMPUTATIONAL, i)) == pytest.approx(0.0, abs=1e-12)
        assert analytic_two_way_detection(comp, ReflectScenario(Basis.FOURIER, i)) == pytest.approx(0.0, abs=1e-12)
    assert analytic_two_way_detection(comp, MeasureResendScenario(0, 0, 0)) == pytest.approx(1.0)
    assert analytic_two_way_detection(comp, MeasureResendScenario(0, 0, 1)) == pytest.approx(0.0)


def test_cnot_forward_leg_detection_values():
    # the entangler leaves computational states alone but flags half the
    # conjugate-state reflections
    comp = _cnot_identity_components()
    for i in range(2):
        assert analytic_two_way_detection(comp, ReflectScenario(Basis.COMPUTATIONAL, i)) == pytest.approx(0.0, abs=1e-12)
    for j in range(2):
        assert analytic_two_way_detection(comp, ReflectScenario(Basis.FOURIER, j)) == pytest.approx(0.5, abs=1e-12)


def test_measure_resend_probability_is_product_of_leg_norms():
    rng = np.random.default_rng(21)
    d = 2
    uf, ub = random_unitary(4, rng), random_unitary(4, rng)
    comp = two_way_attack(uf, ub, d)
    # independent route: evolve each leg and read Born marginals
    for i in range(d):
        forward = qmath.apply_joint(uf, product_state([basis_ket(d, i), basis_ket(d, 0)]), (0, 1))
        p_bob = qmath.subsystem_distribution(forward, 0, Basis.COMPUTATIONAL)
        for j in range(d):
            backward = qmath.apply_joint(ub, product_state([basis_ket(d, j), basis_ket(d, 0)]), (0, 1))
            p_alice = qmath.subsystem_distribution(backward, 0, Basis.COMPUTATIONAL)
            for k in range(d):
                expected = p_bob[j] * p_alice[k]
                got = analytic_two_way_detection(comp, MeasureResendScenario(i, j, k))
                assert got == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("d", [2, 4])
def test_reflect_detection_matches_state_evolution(d):
    rng = np.random.default_rng(17 + d)
    for _ in range(5):
        uf, ub = random_unitary(d * d, rng), random_unitary(d * d, rng)
        comp = two_way_attack(uf, ub, d)
        for basis in (Basis.COMPUTATIONAL, Basis.FOURIER):
            for index in range(d):
                dist = simulate_reflect_distribution(uf, ub, d, d, basis, index)
                expected = 1.0 - dist[index]
                got = analytic_two_way_detection(comp, ReflectScenario(basis, index))
                assert got == pytest.approx(expected, abs=1e-10)


def test_unknown_scenario_rejected():
    comp = _cnot_identity_components()
    with pytest.raises(ValueError):
        analytic_two_way_detection(comp, ("bogus",))


def test_attack_components_rejects_non_unitary():
    with pytest.raises(qmath.NotUnitaryError):
        attack_components(np.ones((4, 4)), 2, 2)


# --- spec parsing -----------------------------------------------------------


def test_attack_spec_round_trip_json():
    spec = attack_from_dict({"kind": "cloning", "target": "Bob1", "F": 0.9})
    assert spec.kind == "cloning" and spec.fidelity == 0.9 and spec.target == "Bob1"


def test_attack_spec_rejects_unknown_kind():
    with pytest.raises(AttackConfigError):
        attack_from_dict({"kind": "teleport", "target": "Bob1"})


def test_attack_spec_requires_target():
    with pytest.raises(AttackConfigError):
        AttackSpec(kind="intercept_resend")


def test_attack_spec_validates_cloning_fidelity():
    with pytest.raises(AttackConfigError):
        attack_from_dict({"kind": "cloning", "target": "Bob1", "F": 1.2})


def test_attack_spec_rejects_unknown_fields():
    with pytest.raises(AttackConfigError):
        attack_from_dict({"kind": "cloning", "target": "Bob1", "F": 0.9, "mode": "x"})


def test_resolve_unitary_presets_and_matrices():
    assert np.allclose(resolve_unitary("identity", 2, 2), np.eye(4))
    assert np.allclose(resolve_unitary("cnot", 2, 2), entangle_measure_unitary(2))
    u = resolve_unitary("random:7", 2, 2)
    assert qmath.is_unitary(u)
    assert np.allclose(resolve_unitary("random:7", 2, 2), u)
    doc = [[[float(z.real), float(z.imag)] for z in row] for row in entangle_measure_unitary(2)]
    assert np.allclose(resolve_unitary(doc, 2, 2), entangle_measure_unitary(2))


def test_resolve_unitary_rejects_bad_input():
    with pytest.raises(AttackConfigError):
        resolve_unitary("warp", 2, 2)
    with pytest.raises(AttackConfigError):
        resolve_unitary(np.eye(3), 2, 2)
    with pytest.raises(AttackConfigError):
        resolve_unitary(np.ones((4, 4)), 2, 2)
