"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints one PASS line (run with ``-s`` to see them live).  The
reference configuration is the n = 128, L = 32*pi box with seeded
unit-energy data, T = 1, dt = 1e-3; several criteria reuse that run through
session-scoped fixtures, and the refinement criteria run its dt/2 and 2n
companions, so this module dominates the suite's runtime.
"""

import time

import numpy as np
import pytest

from mns2d import diagnostics as D
from mns2d import fields as F
from mns2d import initial as I
from mns2d import localize as L
from mns2d import lpkit as LP
from mns2d import solver as S

BOX = 32.0 * np.pi
SEED = 2024
POU_CELLS = (8, 16, 32)

# regression fixtures measured on first calibration of this suite; reruns
# are deterministic and must land within +-5%
LOCAL_BERNSTEIN_CONSTANT = 0.510930
A2_BAND = (0.137343, 0.646320)


def report(num, text):
    print(f"criterion {num:2d} PASS: {text}")


@pytest.fixture(scope="session")
def crit1_run():
    grid = F.Grid(128, BOX)
    u, e, b = I.generate_initial(grid, SEED, normalize=True)
    init = F.State(t=0.0, u=u, E=e, B=b)
    cfg = S.SolverConfig(dt=1e-3, t_final=1.0, output_every=100)
    start = time.time()
    traj = S.run(cfg, init)
    elapsed = time.time() - start
    return traj, elapsed


@pytest.fixture(scope="session")
def crit1_half_dt_run():
    grid = F.Grid(128, BOX)
    u, e, b = I.generate_initial(grid, SEED, normalize=True)
    init = F.State(t=0.0, u=u, E=e, B=b)
    cfg = S.SolverConfig(dt=5e-4, t_final=1.0, output_every=200)
    return S.run(cfg, init)


@pytest.fixture(scope="session")
def crit1_double_n_run():
    # same physical initial data, spectrally injected onto the doubled grid
    coarse = F.Grid(128, BOX)
    u, e, b = I.generate_initial(coarse, SEED, normalize=True)
    init = F.refine_state(F.State(t=0.0, u=u, E=e, B=b), F.Grid(256, BOX))
    cfg = S.SolverConfig(dt=1e-3, t_final=1.0, output_every=100, record_every=10)
    return S.run(cfg, init)


def test_criterion_01_energy_equality(crit1_run, crit1_half_dt_run):
    traj, elapsed = crit1_run
    defect = traj.records[-1]["defect13"]
    assert defect <= 1e-4
    half = crit1_half_dt_run.records[-1]["defect13"]
    ratio = half / defect
    assert 0.15 <= ratio <= 0.35
    assert elapsed <= 300.0
    report(1, f"defect {defect:.3e} <= 1e-4, dt/2 ratio {ratio:.3f} in [0.15, 0.35], "
              f"runtime {elapsed:.0f}s <= 300s")


def test_criterion_02_orthogonality(crit1_run):
    traj, _ = crit1_run
    worst = max(r["orth12"] for r in traj.records)
    assert worst <= 1e-12
    report(2, f"work-term orthogonality defect {worst:.3e} <= 1e-12 at every step")


def test_criterion_03_divergence(crit1_run):
    traj, _ = crit1_run
    worst_u = max(r["div_u"] for r in traj.records)
    worst_b = max(r["div_B"] for r in traj.records)
    assert worst_u <= 1e-10
    assert worst_b <= 1e-10
    report(3, f"div defects u {worst_u:.3e}, B {worst_b:.3e} <= 1e-10 throughout")


def test_criterion_04_partition_of_unity():
    grid = F.Grid(128, BOX)
    worst_sum = 0.0
    for m in POU_CELLS:
        pou = L.build_partition_cells(grid, m)
        total = pou.sum_of_bumps()
        worst_sum = max(worst_sum, float(np.abs(total - 1.0).max()))
        sq = pou.sum_of_squares()
        assert sq.min() >= 1.0 / 16.0
        assert sq.max() <= 1.0 + 1e-12
        base = pou.bump_values(0, 0)
        for k in ((5, 0), (3, 4), (5, 5)):
            assert np.abs(base * pou.bump_values(*k)).max() == 0.0
    assert worst_sum <= 1e-10
    report(4, f"bump sums within {worst_sum:.2e} of 1, squares in [1/16, 1], "
              f"distance-5 disjointness exact, cells {POU_CELLS}")


def test_criterion_05_eigenpair():
    from test_localize import TestEigenIdentity, bisect_j0_zero

    ep = L.eigen_disk()
    oracle = bisect_j0_zero(tol=1e-13)
    assert abs(ep.lam1 - (oracle / 2.0) ** 2) <= 1e-10
    value, gradient, lap = TestEigenIdentity.gaussian_callables()
    _, _, defect = L.verify_eigen_identity(value, gradient, lap, r=1.0, order=256)
    assert defect <= 1e-6
    report(5, f"lam1 {ep.lam1:.9f} matches the series-bisection oracle to 1e-10, "
              f"identity defect {defect:.2e} <= 1e-6")


def test_criterion_06_partition_identity():
    grid = F.Grid(128, BOX)
    rng = np.random.default_rng(6)
    pous = [L.build_partition_cells(grid, m) for m in POU_CELLS]
    worst = 0.0
    for _ in range(50):
        f = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
        target = F.l2_norm(f) ** 2
        for pou in pous:
            worst = max(worst, abs(L.loc_sum(f, pou) - target) / target)
    assert worst <= 1e-10
    report(6, f"lattice mass sum equals the squared norm within {worst:.2e} "
              "(50 fields, all realized scales)")


def test_criterion_07_heat_morrey_stability():
    values = {}
    for n in (64, 128):
        grid = F.Grid(n, 16.0)
        bank = LP.build_filter_bank(grid)
        pous = [L.build_partition_cells(grid, m) for m in POU_CELLS]
        f0 = F.ScalarField.from_function(
            grid, lambda x, y: np.exp(-((x - 8.0) ** 2 + (y - 8.0) ** 2) / (2 * 0.7 ** 2)))
        rep = D.heat_experiment(f0, 1.0, bank, pous, n_samples=41)
        values[n] = rep.morrey_sup.overall
        assert np.isfinite(values[n])
    ratio = values[128] / values[64]
    assert 0.9 <= ratio <= 1.1
    report(7, f"sup-aggregated localized mass stable under refinement: "
              f"{values[64]:.4e} -> {values[128]:.4e} (ratio {ratio:.3f})")


def test_criterion_08_local_bernstein():
    grid = F.Grid(128, BOX)
    bank = LP.build_filter_bank(grid)
    rng = np.random.default_rng(2024)
    ratios = []
    for m in POU_CELLS:
        pou = L.build_partition_cells(grid, m)
        for _ in range(50):
            raw = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
            f = F.to_physical(F.dealias(F.to_spectral(raw)))
            sj = F.to_physical(LP.low_pass(bank, F.to_spectral(f), pou.j))
            num = F.lp_norm(sj, np.inf)
            den = 2.0 ** pou.j * L.loc_sup(f, pou, "bump")
            ratios.append(num / den)
    worst = max(ratios)
    assert worst <= LOCAL_BERNSTEIN_CONSTANT * 1.05
    assert worst >= LOCAL_BERNSTEIN_CONSTANT * 0.95
    report(8, f"low-pass sup over localized mass ratio {worst:.4f} within 5% of the "
              f"recorded constant {LOCAL_BERNSTEIN_CONSTANT}")


def test_criterion_09_reconstruction_and_bony():
    grid = F.Grid(64, 2.0 * np.pi)
    bank = LP.build_filter_bank(grid)
    rng = np.random.default_rng(9)
    worst_rec = 0.0
    worst_bony = 0.0
    for i in range(100):
        raw = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
        f = F.to_spectral(raw)
        total = sum(LP.block(bank, f, j).data for j in bank.indices)
        worst_rec = max(worst_rec, float(np.abs(total - f.data).max() / np.abs(f.data).max()))
        if i < 25:
            u = F.to_physical(F.dealias(f))
            raw2 = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
            v = F.to_physical(F.dealias(F.to_spectral(raw2)))
            pieces = LP.bony(bank, u, v)
            uv = u.data * v.data
            worst_bony = max(worst_bony, float(
                np.linalg.norm(pieces.total().data - uv) / np.linalg.norm(uv)))
    assert worst_rec <= 1e-12
    assert worst_bony <= 1e-10
    report(9, f"block reconstruction within {worst_rec:.2e}, product splitting "
              f"within {worst_bony:.2e}")


def test_criterion_10_borderline_monitor(crit1_run, crit1_double_n_run):
    traj, _ = crit1_run
    finals = {}
    for tag, tr in (("base", traj), ("fine", crit1_double_n_run)):
        grid = tr.grid
        bank = LP.build_filter_bank(grid)
        pous = [L.build_partition_cells(grid, m) for m in POU_CELLS]
        rep = D.borderline_monitor(tr, bank, pous)
        finals[tag] = rep.final()
        for name, value in finals[tag].items():
            assert np.isfinite(value), name
    ratios = {k: finals["fine"][k] / finals["base"][k] for k in finals["base"]}
    for name, ratio in ratios.items():
        assert 0.9 <= ratio <= 1.1, (name, ratio)
    report(10, "all borderline quantities finite at T=1 and stable under n -> 2n: "
               + ", ".join(f"{k} x{v:.3f}" for k, v in ratios.items()))


def test_criterion_11_uniqueness():
    grid = F.Grid(64, BOX)
    bank = LP.build_filter_bank(grid)
    u, e, b = I.generate_initial(grid, SEED, normalize=True)
    init = F.State(t=0.0, u=u, E=e, B=b)

    cfg_small = S.SolverConfig(dt=1e-3, t_final=0.05, output_every=10, record_every=10)
    rep0 = D.uniqueness_experiment(init, cfg_small, 0.0, bank)
    assert rep0.identical is True

    cfg = S.SolverConfig(dt=1e-3, t_final=1.0, output_every=50, record_every=20)
    rep = D.uniqueness_experiment(init, cfg, 1e-8, bank)
    assert rep.max_envelope_ratio <= 1.5
    report(11, f"twin runs bitwise identical at delta=0; delta=1e-8 separation within "
               f"{rep.max_envelope_ratio:.3f}x of the fitted envelope (<= 1.5)")


def test_criterion_12_galerkin():
    grid = F.Grid(128, BOX)
    bank = LP.build_filter_bank(grid)
    u, e, b = I.generate_initial(grid, SEED, normalize=True)
    init = F.State(t=0.0, u=u, E=e, B=b)
    cfg = S.SolverConfig(dt=1e-3, t_final=1.0, output_every=100, record_every=1000)
    rep = D.galerkin_experiment(init, cfg, [-2, -1, 0, 1], bank)
    assert rep.strictly_decreasing()
    report(12, "mollification differences strictly decreasing: "
               + ", ".join(f"{v:.3e}" for v in rep.u_diffs))


def test_criterion_13_heat_characterization():
    grid = F.Grid(64, 16.0)
    bank = LP.build_filter_bank(grid)
    rng = np.random.default_rng(777)
    ratios = []
    for _ in range(30):
        raw = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
        spec = F.dealias(F.to_spectral(raw)).copy()
        spec.data[0, 0] = 0.0
        f = F.to_physical(spec)
        for s, p, r in ((0.5, 1.0, 2.0), (1.0, 2.0, 2.0), (0.5, 2.0, np.inf)):
            ratios.append(D.fourier_herz_heat_check(f, s, p, r, bank).ratio)
    lo, hi = min(ratios), max(ratios)
    big_c = max(1.0 / A2_BAND[0], A2_BAND[1]) * 1.05
    assert lo >= A2_BAND[0] * 0.95 and hi <= A2_BAND[1] * 1.05
    assert all(1.0 / big_c <= r <= big_c for r in ratios)

    scale_sums = [D.heat_weight_scale_sum(1.0, 1.0, j) for j in (8, 16, 32, 64)]
    assert scale_sums[-2] == pytest.approx(scale_sums[-1], rel=1e-3)
    assert scale_sums[-3] == pytest.approx(scale_sums[-1], rel=1e-3)
    report(13, f"characterization ratios in [{lo:.4f}, {hi:.4f}] inside the recorded band; "
               f"scale-sum converged to {scale_sums[-1]:.6f}")


def test_criterion_14_oracle_equivalence():
    from test_fields import direct_dft
    from test_solver import eb_ode_oracle

    grid = F.Grid(16, 2.0 * np.pi)
    rng = np.random.default_rng(14)
    f = F.ScalarField.from_samples(grid, rng.standard_normal((16, 16)))
    spec = F.to_spectral(f)
    oracle = direct_dft(f.data)
    dft_err = float(np.abs(spec.data - oracle).max() / np.abs(oracle).max())
    assert dft_err <= 1e-12

    grid2 = F.Grid(32, 2.0 * np.pi)
    e0 = F.VectorField(grid2, rng.standard_normal((3, 32, 32)), F.PHYSICAL)
    b0 = F.VectorField(grid2, rng.standard_normal((3, 32, 32)), F.PHYSICAL)
    e0 = F.vec_dealias(F.vec_to_spectral(e0))
    b0 = F.leray_project(F.vec_dealias(F.vec_to_spectral(b0)))
    st = F.State(t=0.0, u=F.VectorField.zeros(grid2, F.SPECTRAL), E=e0, B=b0)
    cfg = S.SolverConfig(dt=1e-2, t_final=1.0, output_every=100, record_every=100,
                         freeze_velocity=True)
    traj = S.run(cfg, st)
    final = traj.states[-1]
    scale = max(np.abs(e0.data).max(), np.abs(b0.data).max())
    worst = 0.0
    for a, b_ in ((1, 2), (3, 0), (5, 7), (0, 4), (9, 9)):
        e_or, b_or = eb_ode_oracle(grid2.k1d[a], grid2.k1d[b_],
                                   e0.data[:, a, b_], b0.data[:, a, b_], 1.0)
        worst = max(worst,
                    float(np.abs(final.E.data[:, a, b_] - e_or).max() / scale),
                    float(np.abs(final.B.data[:, a, b_] - b_or).max() / scale))
    assert worst <= 1e-8
    report(14, f"direct-summation DFT within {dft_err:.2e}; frozen-velocity "
               f"electromagnetic run within {worst:.2e} of the per-mode ODE oracle")
