import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from hybridsearch import (
    ACModel,
    CapacityError,
    EvolutionConfig,
    HybridSpec,
    SearchSystem,
    ac_schedule,
    analytic_schedule,
    build_full_hamiltonian,
    evolve_closed,
    evolve_open,
    linear_schedule,
    min_gap,
    numeric_schedule,
    optimal_beta,
    optimal_gamma,
    qw_first_peak,
)
from hybridsearch.dynamics import (
    FullSpaceStepper,
    ac_success_surface,
    ac_walk_success,
    default_steps,
    evolve_open_batch,
    line_success_surface,
    open_success_surface,
    runtime_cap,
    walk_success,
)


def dense_oracle(system, spec, t_f, steps):
    """Midpoint exponentials of the dense Hamiltonian via scipy expm."""
    psi = system.initial_state().astype(complex)
    dt = t_f / steps
    tau = (np.arange(steps) + 0.5) / steps
    A, B = spec.coefficients(tau)
    A, B = np.broadcast_to(A, tau.shape), np.broadcast_to(B, tau.shape)
    for a, b in zip(A, B):
        psi = expm(-1j * dt * build_full_hamiltonian(system, a, b).data) @ psi
    return abs(psi[system.marked_index]) ** 2


# ---------------------------------------------------------------------------
# configuration


def test_default_step_rule():
    assert default_steps(0.0) == 2000
    assert default_steps(10.0) == 2000
    assert default_steps(100.25) == 4010
    assert EvolutionConfig(3.0, steps=17).resolved_steps() == 17


@pytest.mark.parametrize("kw", [dict(t_f=-1.0), dict(t_f=np.nan), dict(t_f=1.0, steps=0),
                                dict(t_f=1.0, record_stride=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolutionConfig(**kw)


def test_runtime_cap_enforced():
    g = 0.05
    sch = ac_schedule(g, t_f=10.0)
    cap = runtime_cap(ACModel(g))
    assert cap == pytest.approx(5 * np.pi / g)
    with pytest.raises(ValueError, match="cap"):
        evolve_closed(ACModel(g), HybridSpec(1.0, 0.5, sch), EvolutionConfig(1.01 * cap))
    res = evolve_closed(ACModel(g), HybridSpec(1.0, 0.5, sch),
                        EvolutionConfig(1.01 * cap, steps=200, allow_long=True))
    assert res.steps == 200
    # walks are not schedule driven and are never capped
    evolve_closed(ACModel(g), HybridSpec(0.0, 0.5), EvolutionConfig(2 * cap, steps=10))


# ---------------------------------------------------------------------------
# closed evolution


@pytest.mark.parametrize("system", [SearchSystem.line(5), SearchSystem.full(5, "10110")])
def test_zero_runtime_gives_guessing(system):
    res = evolve_closed(system, HybridSpec(0.0, 0.6), EvolutionConfig(0.0))
    assert res.final_success == pytest.approx(1 / 32, abs=1e-15)


@pytest.mark.parametrize("g", [0.1, 0.05])
def test_ac_walk_full_transfer(g):
    res = evolve_closed(ACModel(g), HybridSpec(0.0, 0.5), EvolutionConfig(np.pi / g))
    assert abs(res.final_success - 1) < 1e-6
    t = res.times[::97]
    np.testing.assert_allclose(res.success[::97], ac_walk_success(g, t), atol=1e-12)


def test_hypercube_walk_matches_dense_oracle():
    n = 7
    t_f = np.pi / 2 * np.sqrt(2.0**n)
    spec = HybridSpec(0.0, optimal_beta(n))
    full = SearchSystem.full(n, "0110100")
    res = evolve_closed(full, spec, EvolutionConfig(t_f))
    H = build_full_hamiltonian(full, 1 - spec.beta, spec.beta).data
    psi = expm(-1j * t_f * H) @ full.initial_state()
    assert res.final_success == pytest.approx(abs(psi[full.marked_index]) ** 2, abs=1e-4)
    line = evolve_closed(SearchSystem.line(n), spec, EvolutionConfig(t_f))
    assert line.final_success == pytest.approx(res.final_success, abs=1e-10)


def test_full_space_stepper_against_expm():
    system = SearchSystem.full(5, "10110")
    stepper = FullSpaceStepper(system)
    H = build_full_hamiltonian(system, 0.37, 0.81).data
    U = expm(-1j * 0.9 * H)
    np.testing.assert_allclose(stepper.dense_unitary(0.37, 0.81, 0.9), U, atol=1e-13)
    psi = np.random.default_rng(1).normal(size=32) + 0j
    np.testing.assert_allclose(stepper.operator(0.37, 0.81, 0.9)(psi), U @ psi, atol=1e-13)


def test_hybrid_full_matches_dense_oracle():
    n = 4
    sch = analytic_schedule(n, t_f=6.0)
    spec = HybridSpec(0.5, optimal_beta(n), sch)
    system = SearchSystem.full(n, "1001")
    res = evolve_closed(system, spec, EvolutionConfig(6.0, steps=300))
    assert res.final_success == pytest.approx(dense_oracle(system, spec, 6.0, 300), abs=1e-12)


def test_line_and_full_agree_for_hybrids():
    n = 5
    sch = analytic_schedule(n, t_f=30.0)
    spec = HybridSpec(0.5, optimal_beta(n), sch)
    a = evolve_closed(SearchSystem.line(n), spec, EvolutionConfig(30.0))
    b = evolve_closed(SearchSystem.full(n, "01101"), spec, EvolutionConfig(30.0))
    np.testing.assert_allclose(a.success, b.success, atol=1e-10)
    surf = line_success_surface(n, [0.5], spec.beta, sch, [30.0])
    assert surf[0, 0] == pytest.approx(a.final_success, abs=1e-12)


def test_norm_conserved():
    n = 8
    sch = numeric_schedule(n)
    res = evolve_closed(SearchSystem.line(n), HybridSpec(0.7, optimal_beta(n), sch),
                        EvolutionConfig(runtime_cap(SearchSystem.line(n))))
    assert res.final_norm_error < 1e-9
    assert np.all((res.success >= 0) & (res.success <= 1))


def test_record_stride():
    res = evolve_closed(SearchSystem.line(4), HybridSpec(0.0, 0.6), EvolutionConfig(5.0, steps=10, record_stride=4))
    np.testing.assert_allclose(res.times, [0.0, 2.0, 4.0, 5.0])


def test_gauge_invariance_all_marked_states():
    n = 5
    sch = analytic_schedule(n, t_f=12.0)
    spec = HybridSpec(0.6, optimal_beta(n), sch)
    finals, argmax = [], []
    for bits in itertools.product("01", repeat=n):
        res = evolve_closed(SearchSystem.full(n, "".join(bits)), spec, EvolutionConfig(12.0, steps=400))
        finals.append(res.final_success)
        argmax.append(int(np.argmax(res.success)))
    assert np.ptp(finals) < 1e-12
    assert len(set(argmax)) == 1


def test_step_halving():
    n = 6
    sch = analytic_schedule(n, t_f=40.0)
    spec = HybridSpec(0.4, optimal_beta(n), sch)
    a = evolve_closed(SearchSystem.line(n), spec, EvolutionConfig(40.0))
    b = evolve_closed(SearchSystem.line(n), spec, EvolutionConfig(40.0, steps=2 * a.steps))
    assert abs(a.final_success - b.final_success) < 1e-4


@pytest.mark.parametrize("n", [5, 8])
@pytest.mark.parametrize("kind", ["analytic", "numeric"])
def test_annealing_monotone_in_runtime(n, kind):
    cap = runtime_cap(SearchSystem.line(n))
    sch = analytic_schedule(n, t_f=1.0) if kind == "analytic" else numeric_schedule(n)
    t_fs = np.geomspace(1.0, cap, 25)
    P = line_success_surface(n, [1.0], optimal_beta(n), sch, t_fs)[0]
    assert np.all(np.diff(P) >= -1e-3)


def test_linear_schedule_is_slow():
    # a linear sweep at the optimal-schedule runtime does much worse
    n = 10
    opt = analytic_schedule(n, epsilon=0.2)
    lin = linear_schedule(t_f=opt.t_f)
    p_opt = line_success_surface(n, [1.0], optimal_beta(n), opt, [opt.t_f])[0, 0]
    p_lin = line_success_surface(n, [1.0], optimal_beta(n), lin, [opt.t_f])[0, 0]
    assert p_opt > 0.9 > p_lin


# ---------------------------------------------------------------------------
# avoided-crossing surfaces


def test_ac_surface_matches_single_runs():
    g = 0.05
    sch = ac_schedule(g, epsilon=1.0)
    t_fs = np.array([50.0, 200.0])
    S = ac_success_surface(g, [0.0, 0.3, 1.0], t_fs, [0.0, 0.4], steps=2000)
    for ia, alpha in enumerate([0.0, 0.3, 1.0]):
        for iq, q in enumerate([0.0, 0.4]):
            for it, tf in enumerate(t_fs):
                spec = HybridSpec(alpha, 0.5, sch if alpha else None)
                res = evolve_closed(ACModel(g, q), spec, EvolutionConfig(tf, steps=2000))
                assert S[ia, it, iq] == pytest.approx(res.final_success, abs=1e-12)


def test_ac_annealing_adiabatic():
    g = 0.05
    sch = ac_schedule(g, epsilon=0.1)
    res = evolve_closed(ACModel(g), HybridSpec(1.0, 0.5, sch), EvolutionConfig(sch.t_f))
    assert res.final_success >= 1 - (1.5 * 0.1) ** 2


# ---------------------------------------------------------------------------
# quantum-walk peaks


def test_first_peak_ac():
    t, p = qw_first_peak(ACModel(0.01), 1.0)
    assert t == pytest.approx(np.pi / 0.01, rel=1e-6)
    assert p == pytest.approx(1.0, abs=1e-9)


def test_first_peak_grows_with_n():
    p12 = qw_first_peak(SearchSystem.line(12), optimal_gamma(12))[1]
    p14 = qw_first_peak(SearchSystem.line(14), optimal_gamma(14))[1]
    assert p14 > p12


def test_first_peak_is_a_local_maximum():
    system = SearchSystem.line(9)
    t, p = qw_first_peak(system, optimal_gamma(9))
    around = walk_success(system, optimal_gamma(9), t + np.linspace(-0.5, 0.5, 11))
    assert p >= around.max() - 1e-9


def test_large_n_walk_is_two_level():
    n = 50
    system = SearchSystem.line(n)
    g = min_gap(n).g_min
    t = np.linspace(0, 2 * np.pi / g, 2001)
    P = walk_success(system, optimal_gamma(n), t)
    assert np.sqrt(np.mean((P - np.sin(g * t / 2) ** 2) ** 2)) < 0.02


def test_first_peak_rejects_bad_gamma():
    with pytest.raises(ValueError):
        qw_first_peak(SearchSystem.line(5), 0.0)


# ---------------------------------------------------------------------------
# open systems


def test_open_unitary_limit():
    n = 4
    sch = analytic_schedule(n, t_f=8.0)
    spec = HybridSpec(0.8, optimal_beta(n), sch)
    system = SearchSystem.full(n, "0111")
    a = evolve_closed(system, spec, EvolutionConfig(8.0))
    b = evolve_open(system, spec, EvolutionConfig(8.0), 0.0)
    np.testing.assert_allclose(a.success, b.success, atol=1e-8)


def test_open_strong_dephasing_gives_guessing():
    n = 5
    spec = HybridSpec(0.0, optimal_beta(n))
    res = evolve_open(SearchSystem.full(n), spec, EvolutionConfig(10.0), 1e3)
    assert res.final_success == pytest.approx(1 / 32, rel=0.01)


def test_density_matrix_properties():
    n = 5
    sch = analytic_schedule(n, t_f=15.0)
    spec = HybridSpec(0.5, optimal_beta(n), sch)
    res = evolve_open(SearchSystem.full(n, "11000"), spec, EvolutionConfig(15.0), 0.3)
    rho = res.final_state
    assert res.final_norm_error < 1e-8
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(rho).min() >= -1e-8


def test_open_batch_matches_single_runs():
    n = 4
    spec = HybridSpec(0.0, optimal_beta(n))
    cfg = EvolutionConfig(7.0, steps=500)
    batch = evolve_open_batch(SearchSystem.full(n), spec, cfg, [0.0, 0.1, 2.0])
    for r, k in zip(batch, [0.0, 0.1, 2.0]):
        single = evolve_open(SearchSystem.full(n), spec, cfg, k)
        np.testing.assert_allclose(r.success, single.success, atol=1e-13)


def test_open_surface_guessing_column():
    n = 4
    sch = analytic_schedule(n, t_f=1.0)
    S = open_success_surface(SearchSystem.full(n), [0.0, 1.0], optimal_beta(n), sch, [0.0, 3.0], [0.0, 0.5],
                             steps=200)
    np.testing.assert_array_equal(S[:, 0, :], 1 / 16)
    assert S.shape == (2, 2, 2)


def test_open_requires_full_space_within_cap():
    spec = HybridSpec(0.0, 0.6)
    with pytest.raises(ValueError):
        evolve_open(SearchSystem.line(4), spec, EvolutionConfig(1.0), 0.1)
    with pytest.raises(CapacityError):
        evolve_open(SearchSystem.full(11), spec, EvolutionConfig(1.0), 0.1)
    with pytest.raises(ValueError):
        evolve_open(SearchSystem.full(3), spec, EvolutionConfig(1.0), -1.0)


@pytest.mark.slow
def test_open_walk_scan_step_refinement():
    # alpha = 0 is static, so one recorded run covers the whole t_f scan
    n, kappa, t_max = 7, 0.0385, 200.0
    spec = HybridSpec(0.0, optimal_beta(n))
    system = SearchSystem.full(n)
    coarse = evolve_open(system, spec, EvolutionConfig(t_max), kappa)
    fine = evolve_open(system, spec, EvolutionConfig(t_max, steps=10 * coarse.steps, record_stride=10), kappa)
    np.testing.assert_allclose(fine.times, coarse.times, atol=1e-9)
    assert coarse.success.max() == pytest.approx(fine.success.max(), abs=1e-3)
    assert coarse.times[np.argmax(coarse.success)] == pytest.approx(fine.times[np.argmax(fine.success)], abs=1e-3 * t_max)
