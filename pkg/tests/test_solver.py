import numpy as np
import pytest

from sparsephase.constraints import ProblemInstance
from sparsephase.grid import principal_arg, zero_norm
from sparsephase.simulate import SimulationSpec, simulate_instance
from sparsephase.solver import (
    IterationTrace,
    NonFiniteIterateError,
    SolverConfig,
    cyclic_step,
    estimate_linear_rate,
    gs_step,
    run,
    srop_step,
)

from conftest import small_instance


def random_problem(rng, n, s=None):
    chi = (rng.random((n, n)) > 0.3).astype(float)
    chi[0, 0] = 1.0
    k = int(chi.sum())
    return ProblemInstance(b=rng.uniform(0, 2, (n, n)), chi=chi,
                           diversity=rng.uniform(-np.pi, np.pi, (n, n)),
                           s=int(rng.integers(1, k)) if s is None else s)


def random_phase(rng, inst):
    return principal_arg(inst.chi * np.exp(1j * rng.uniform(-np.pi, np.pi, inst.chi.shape)))


class TestSteps:
    def test_truth_is_fixed_point(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=10, diameter=12)
        assert np.max(np.abs(srop_step(sim.truth, inst) - sim.truth)) <= 1e-10
        assert np.max(np.abs(gs_step(sim.truth, inst) - sim.truth)) <= 1e-10
        x = sim.aperture * np.exp(1j * sim.truth)
        assert np.max(np.abs(cyclic_step(x, inst) - x)) <= 1e-10

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_srop_equals_cyclic_projections(self, rng, n):
        for _ in range(100):
            inst = random_problem(rng, n)
            phi = random_phase(rng, inst)
            a = srop_step(phi, inst)
            b = principal_arg(cyclic_step(inst.chi * np.exp(1j * phi), inst))
            assert np.max(np.abs(a - b)) <= 1e-12

    def test_cyclic_output_in_omega3(self, rng):
        inst = random_problem(rng, 8)
        x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        out = cyclic_step(x, inst)
        assert np.max(np.abs(np.abs(out) - inst.chi)) <= 1e-12
        assert zero_norm(principal_arg(out), inst.support) <= inst.s

    def test_first_step_makes_progress(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=10, diameter=12)
        nxt = srop_step(np.zeros((16, 16)), inst)
        assert np.linalg.norm(nxt) > 0

    def test_gs_equals_srop_without_truncation(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=10, diameter=12)
        full = inst.with_s(len(inst.support))
        phi = random_phase(rng, inst)
        assert np.array_equal(srop_step(phi, full), gs_step(phi, full))

    def test_gs_differs_when_truncation_binds(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=10, diameter=12, s=10)
        a, b = srop_step(np.zeros((16, 16)), inst), gs_step(np.zeros((16, 16)), inst)
        assert zero_norm(b, inst.support) > inst.s
        assert not np.array_equal(a, b)


class TestRun:
    def test_init_at_truth_stops_immediately(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=10, diameter=12)
        for enabled in (True, False):
            res = run(inst, SolverConfig(sparsity_step_enabled=enabled), initial_phase=sim.truth, truth=sim.truth)
            assert res.iterations_used == 1
            assert res.trace.termination_reason == "tolerance"
            assert res.trace.change[0] <= 1e-10

    def test_zero_tolerance_runs_full_budget(self, rng):
        sim, inst = small_instance(rng, n=8, sparsity=4, diameter=8)
        res = run(inst, SolverConfig(tolerance=0, max_iterations=25))
        assert res.iterations_used == 25 == len(res.trace)
        assert res.trace.termination_reason == "max_iterations"
        assert res.trace.k == list(range(1, 26))

    def test_invariants_along_trajectory(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=12, diameter=14, s=13)
        phi = np.zeros((16, 16))
        for _ in range(40):
            phi = srop_step(phi, inst)
            assert zero_norm(phi, inst.support) <= inst.s
            assert np.all(phi > -np.pi) and np.all(phi <= np.pi)
            x = inst.chi * np.exp(1j * phi)
            assert np.max(np.abs(np.abs(x) - inst.chi)) <= 1e-15

    def test_change_bounded_and_trace_columns(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=12, diameter=14, s=13)
        res = run(inst, SolverConfig(max_iterations=30, tolerance=0, record_set_distances=True), truth=sim.truth)
        assert all(0 <= c <= 2 * np.pi * 16 for c in res.trace.change)
        assert all(v is not None for v in res.trace.rms_support + res.trace.dist1 + res.trace.dist3)
        assert all(abs(d2) <= 1e-12 for d2 in res.trace.dist2)
        res2 = run(inst, SolverConfig(max_iterations=5, tolerance=0))
        assert res2.trace.rms_support == [None] * 5 and res2.trace.dist1 == [None] * 5

    def test_deterministic(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=12, diameter=14)
        cfg = SolverConfig(max_iterations=50, tolerance=0)
        a, b = run(inst, cfg, truth=sim.truth), run(inst, cfg, truth=sim.truth)
        assert a.trace.change == b.trace.change and a.trace.rms_support == b.trace.rms_support
        assert np.array_equal(a.estimate, b.estimate)

    def test_estimate_is_sparse(self, rng):
        sim, inst = small_instance(rng, n=16, sparsity=12, diameter=14, s=13)
        res = run(inst, SolverConfig(max_iterations=200))
        assert zero_norm(res.estimate, inst.support) <= 13

    def test_rejects_bad_initial_phase(self, rng):
        sim, inst = small_instance(rng, n=8, sparsity=4, diameter=6)
        bad = np.zeros((8, 8))
        bad[0, 0] = 1.0  # outside the aperture
        with pytest.raises(ValueError):
            run(inst, initial_phase=bad)
        with pytest.raises(ValueError):
            run(inst, initial_phase=np.full((8, 8), -np.pi) * sim.aperture)

    def test_non_finite_iterate_reported(self, rng, monkeypatch):
        sim, inst = small_instance(rng, n=8, sparsity=4, diameter=8)
        import sparsephase.solver as solver_mod

        calls = {"n": 0}
        real = solver_mod.srop_step

        def flaky(phi, inst):
            calls["n"] += 1
            out = real(phi, inst)
            if calls["n"] == 3:
                out[0, 0] = np.nan
            return out

        monkeypatch.setattr(solver_mod, "srop_step", flaky)
        with pytest.raises(NonFiniteIterateError) as info:
            run(inst, SolverConfig(tolerance=0, max_iterations=10))
        assert info.value.iteration == 3 and len(info.value.trace) == 2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(tolerance=-1)
        with pytest.raises(ValueError):
            SolverConfig(max_iterations=0)


class TestLinearRate:
    def test_geometric(self):
        fit = estimate_linear_rate([0.9**k for k in range(1, 101)])
        assert fit.rate == pytest.approx(0.9, abs=1e-6)
        assert fit.r_squared > 0.999

    def test_constant(self):
        fit = estimate_linear_rate([0.3] * 40)
        assert fit.rate == pytest.approx(1.0, abs=1e-12)

    def test_insufficient(self):
        with pytest.raises(ValueError):
            estimate_linear_rate([1.0] * 12)
        with pytest.raises(ValueError):
            estimate_linear_rate([0.0] * 100)

    def test_accepts_trace(self):
        t = IterationTrace()
        for k in range(1, 41):
            t.append(k, 0.5**k)
        assert estimate_linear_rate(t).rate == pytest.approx(0.5, abs=1e-9)

    def test_noise_free_srop_converges_linearly(self):
        sim = simulate_instance(SimulationSpec(n=16, aperture_diameter=16, sparsity_level=15, seed=3))
        res = run(sim.problem(15), SolverConfig())
        fit = estimate_linear_rate(res.trace)
        assert fit.rate < 1 and fit.r_squared > 0.9
