"""Quick property checks run by ``sparsephase selftest``.

Setting the environment variable ``SPARSEPHASE_SELFTEST_FAULT`` to one of
``sparse_projection``, ``dft`` or ``step`` swaps in a deliberately broken
operation so the harness itself can be tested.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from sparsephase import constraints, solver, transform
from sparsephase.constraints import ProblemInstance, brute_force_sparse_phase_projection
from sparsephase.grid import frobenius_norm, principal_arg

FAULT_ENV = "SPARSEPHASE_SELFTEST_FAULT"


@dataclass
class SuiteResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def _ops(fault):
    ops = {
        "project_sparse_phase": constraints.project_sparse_phase,
        "dft2": transform.dft2,
        "idft2": transform.idft2,
        "srop_step": solver.srop_step,
        "cyclic_step": solver.cyclic_step,
    }
    if fault == "sparse_projection":
        def bad(z, inst):
            # keeps the smallest phases instead of the largest
            phi = principal_arg(z)
            order = np.argsort(np.abs(phi.ravel()[inst.support.flat]), kind="stable")[: inst.s]
            keep = inst.support.flat[order]
            out = np.zeros(phi.size)
            out[keep] = phi.ravel()[keep]
            return inst.chi * np.exp(1j * out.reshape(phi.shape))
        ops["project_sparse_phase"] = bad
    elif fault == "dft":
        ops["dft2"] = lambda f: np.fft.fft2(f)
    elif fault == "step":
        ops["srop_step"] = lambda phi, inst: solver.gs_step(phi, inst)
    elif fault:
        raise ValueError(f"unknown fault {fault!r}")
    return ops


def _random_instance(rng, n, support_size=None, s=None):
    chi = np.zeros(n * n)
    size = n * n if support_size is None else support_size
    chi[rng.choice(n * n, size=size, replace=False)] = 1.0
    chi = chi.reshape(n, n)
    div = rng.uniform(-np.pi, np.pi, (n, n))
    b = rng.uniform(0, 2, (n, n))
    if s is None:
        s = int(rng.integers(0, size + 1))
    return ProblemInstance(b=b, chi=chi, diversity=div, s=s)


def oracle_suite(ops, rng, trials=200) -> SuiteResult:
    passed = 0
    for _ in range(trials):
        inst = _random_instance(rng, 3, support_size=int(rng.integers(4, 10)))
        z = inst.chi * np.exp(1j * rng.uniform(-np.pi, np.pi, inst.chi.shape))
        p = ops["project_sparse_phase"](z, inst)
        best = brute_force_sparse_phase_projection(z, inst)
        d_best = frobenius_norm(z - best[0])
        if abs(frobenius_norm(z - p) - d_best) <= 1e-12 and any(np.allclose(p, w, atol=1e-12, rtol=0) for w in best):
            passed += 1
    return SuiteResult("sparse-phase projection vs brute-force oracle", passed, trials)


def unitarity_suite(ops, rng, trials=20) -> SuiteResult:
    passed = total = 0
    for n in (4, 8, 16, 64):
        for _ in range(trials):
            f = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            d = transform.DiversityOperator(rng.uniform(-np.pi, np.pi, (n, n)))
            nf = frobenius_norm(f)
            checks = [
                abs(frobenius_norm(ops["dft2"](f)) - nf) <= 1e-12 * nf,
                frobenius_norm(ops["idft2"](ops["dft2"](f)) - f) <= 1e-12 * nf,
                abs(frobenius_norm(d.apply(f)) - nf) <= 1e-12 * nf,
                frobenius_norm(d.apply_inverse(d.apply(f)) - f) <= 1e-12 * nf,
            ]
            total += 1
            passed += all(checks)
    return SuiteResult("unitarity of dft2 and diversity", passed, total)


def equivalence_suite(ops, rng, trials=30) -> SuiteResult:
    passed = total = 0
    for n in (4, 8, 16):
        for _ in range(trials):
            inst = _random_instance(rng, n, s=int(rng.integers(1, n * n // 2)))
            phi = principal_arg(np.exp(1j * rng.uniform(-np.pi, np.pi, (n, n))))
            a = ops["srop_step"](phi, inst)
            b = principal_arg(ops["cyclic_step"](inst.chi * np.exp(1j * phi), inst))
            total += 1
            passed += bool(np.max(np.abs(a - b)) <= 1e-12)
    return SuiteResult("SROP step vs cyclic projections", passed, total)


def run_selftest(fault=None, seed=0) -> list[SuiteResult]:
    if fault is None:
        fault = os.environ.get(FAULT_ENV) or None
    ops = _ops(fault)
    rng = np.random.default_rng(seed)
    return [oracle_suite(ops, rng), unitarity_suite(ops, rng), equivalence_suite(ops, rng)]


def format_report(results) -> str:
    lines = [f"{'PASS' if r.ok else 'FAIL'}  {r.name}: {r.passed}/{r.total}" for r in results]
    ok = all(r.ok for r in results)
    lines.append("selftest " + ("passed" if ok else "FAILED"))
    return "\n".join(lines)
