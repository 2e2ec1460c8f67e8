"""Shared fixtures: a cheap mid-size pipeline bundle and the full benchmark."""

from types import SimpleNamespace

import pytest

import mixsolver as mx


def build_bundle(n_b, n_f, M, g_bf, g_bb=0.0, g_ff=0.0, dense_cutoff=4000,
                 lambda_floor=1e-10):
    basis = mx.OrbitalBasis(M)
    model = mx.MixtureModel(
        sector_b=mx.enumerate_sector(mx.Statistics.BOSE, n_b, M),
        sector_f=mx.enumerate_sector(mx.Statistics.FERMI, n_f, M),
        basis=basis, g_bf=g_bf, g_bb=g_bb, g_ff=g_ff, dense_cutoff=dense_cutoff)
    op = mx.assemble(model)
    state = mx.eigensolve(op, k=1)[0]
    decomp = mx.decompose(state, lambda_floor=lambda_floor)
    return SimpleNamespace(model=model, op=op, basis=basis, state=state, decomp=decomp)


@pytest.fixture(scope="session")
def small():
    """M=8 interacting mixture: dense solve, runs in under a second."""
    return build_bundle(2, 2, 8, 1.0)


@pytest.fixture(scope="session")
def small_induced(small):
    ind = mx.compute_induced(small.decomp, small.model, small.op)
    t = mx.transition_amplitudes(small.decomp, small.model, small.op)
    return SimpleNamespace(ind=ind, t=t, **vars(small))


@pytest.fixture(scope="session")
def benchmark():
    """Reference benchmark: N_b = N_f = 2, g_bf = 1, M = 14 (Lanczos path)."""
    return build_bundle(2, 2, 14, 1.0)


@pytest.fixture(scope="session")
def benchmark_full(benchmark):
    """Benchmark plus Schmidt amplitudes, induced data, SMF and effective runs."""
    b = benchmark
    t = mx.transition_amplitudes(b.decomp, b.model, b.op)
    ind = mx.compute_induced(b.decomp, b.model, b.op)
    smf = mx.smf_solve(b.model, operator=b.op)
    eff = {}
    sol = {}
    for species in ("b", "f"):
        eff[species] = mx.build_effective(ind, b.decomp, b.model, species, b.op)
        sol[species] = mx.solve_effective(eff[species])
    return SimpleNamespace(t=t, ind=ind, smf=smf, eff=eff, sol=sol, **vars(b))
