"""Dyadic decomposition, norm, and paraproduct tests."""

import numpy as np
import pytest

from mns2d import fields as F
from mns2d import lpkit as LP

from conftest import random_scalar


@pytest.fixture(scope="module")
def grid():
    return F.Grid(64, 2.0 * np.pi)


@pytest.fixture(scope="module")
def bank(grid):
    return LP.build_filter_bank(grid)


def plateau_mode_field(grid, j, second_axis=0):
    """A cosine mode sitting where ring j's mask equals one exactly."""
    kap = 1.5 * 2.0 ** j  # inside the psi plateau [4/3, 2] * 2^j
    m = round(kap / grid.kmin)
    f = F.ScalarField.zeros(grid, F.SPECTRAL).copy()
    f.data[m, second_axis] = grid.n ** 2 / 2
    f.data[(-m) % grid.n, (-second_axis) % grid.n] = grid.n ** 2 / 2
    return F.to_physical(f)


class TestFilterBank:
    def test_partition_of_unity_on_random_modes(self, grid, bank):
        rng = np.random.default_rng(0)
        total = sum(bank.masks[j] for j in bank.indices)
        ii = rng.integers(0, grid.n, size=200)
        jj = rng.integers(0, grid.n, size=200)
        assert np.abs(total[ii, jj] - 1.0).max() <= 1e-12

    def test_masks_three_apart_disjoint(self, bank):
        for j in bank.indices:
            if j + 3 in bank.masks:
                assert np.abs(bank.masks[j] * bank.masks[j + 3]).max() == 0.0

    def test_masks_two_apart_disjoint(self, bank):
        # quasi-orthogonality: |j - j'| >= 2 means disjoint supports
        for j in bank.indices:
            if j + 2 in bank.masks:
                assert np.abs(bank.masks[j] * bank.masks[j + 2]).max() == 0.0

    def test_mask_range(self, bank):
        for m in bank.masks.values():
            assert m.min() >= 0.0
            assert m.max() <= 1.0 + 1e-12

    def test_renormalization_is_small(self, bank):
        assert bank._raw_deviation < 1e-3

    def test_ring_count_and_indices(self, grid, bank):
        assert len(bank.ring_indices) >= 3
        assert bank.low_index == bank.ring_indices[0] - 1
        assert bank.indices[0] == bank.low_index

    def test_out_of_range_rejected(self, bank, grid):
        with pytest.raises(LP.FilterBankError):
            bank.mask(bank.indices[-1] + 5)


class TestBlocks:
    def test_pure_mode_block_is_mask_multiple(self, grid, bank):
        f = F.ScalarField.zeros(grid, F.SPECTRAL).copy()
        f.data[5, 0] = 1.0
        f.data[-5, 0] = 1.0
        kmag = grid.kmag[5, 0]
        for j in bank.indices:
            b = LP.block(bank, f, j)
            assert b.data[5, 0] == pytest.approx(bank.masks[j][5, 0])
        total = sum(bank.masks[j][5, 0] for j in bank.indices)
        assert total == pytest.approx(1.0), f"modes at |k|={kmag} must be covered"

    def test_reconstruction(self, grid, bank):
        rng = np.random.default_rng(1)
        for _ in range(100):
            f = F.to_spectral(random_scalar(grid, rng))
            total = sum(LP.block(bank, f, j).data for j in bank.indices)
            assert np.abs(total - f.data).max() <= 1e-12 * np.abs(f.data).max()

    def test_blocks_two_apart_annihilate(self, grid, bank):
        rng = np.random.default_rng(2)
        f = F.to_spectral(random_scalar(grid, rng))
        for j in bank.ring_indices:
            for jp in bank.indices:
                if abs(j - jp) >= 2:
                    bb = LP.block(bank, LP.block(bank, f, jp), j)
                    assert np.abs(bb.data).max() == 0.0

    def test_partial_sum_telescopes(self, grid, bank):
        rng = np.random.default_rng(3)
        f = F.to_spectral(random_scalar(grid, rng))
        s = LP.block_partial_sum(bank, f, bank.indices[-1])
        assert np.abs(s.data - f.data).max() <= 1e-12 * np.abs(f.data).max()
        empty = LP.block_partial_sum(bank, f, bank.low_index - 1)
        assert np.abs(empty.data).max() == 0.0


class TestBesov:
    def test_p2_q2_matches_squared_mask_identity(self, grid, bank):
        # The exact content of the s=0, p=q=2 norm on overlapping smooth
        # masks: ||f||_B^2 = (L^2/n^4) sum_k (sum_j m_j(k)^2) |fhat|^2.
        rng = np.random.default_rng(4)
        f = F.to_spectral(random_scalar(grid, rng))
        spec = LP.NormSpec("besov", s=0.0, p=2, q=2)
        val = LP.besov_norm(bank, f, spec)
        msq = sum(bank.masks[j] ** 2 for j in bank.indices)
        oracle = np.sqrt(grid.length ** 2 / grid.n ** 4 * np.sum(msq * np.abs(f.data) ** 2))
        assert val == pytest.approx(oracle, rel=1e-12)
        # mask overlap bounds the ratio to the plain L2 norm on both sides
        assert np.sqrt(0.5) * F.l2_norm(f) * (1 - 1e-12) <= val <= F.l2_norm(f) * (1 + 1e-12)

    def test_single_ring_value(self, grid, bank):
        f = plateau_mode_field(grid, 2)
        spec = LP.NormSpec("besov", s=1.5, p=2, q=2)
        val = LP.besov_norm(bank, f, spec)
        assert val == pytest.approx(2.0 ** (2 * 1.5) * F.l2_norm(f), rel=1e-12)

    def test_gaussian_grid_independence(self):
        # High-resolution oracle: the same norm on a 2x finer grid.
        length = 16.0
        sigma = 0.7

        def gaussian(x, y):
            return np.exp(-((x - length / 2) ** 2 + (y - length / 2) ** 2) / (2 * sigma ** 2))

        vals = {}
        for n, refine in ((64, 16), (128, 8)):
            g = F.Grid(n, length)
            b = LP.build_filter_bank(g)
            f = F.ScalarField.from_function(g, gaussian)
            for tag, spec in (
                ("s1_p2", LP.NormSpec("besov", s=1.0, p=2, q=2)),
                ("s0_p1", LP.NormSpec("besov", s=0.0, p=1, q=1)),
                ("s0_pinf", LP.NormSpec("besov", s=0.0, p=np.inf, q=np.inf)),
            ):
                vals.setdefault(tag, {})[n] = LP.besov_norm(b, f, spec, refine=refine)
        for tag, by_n in vals.items():
            assert by_n[64] == pytest.approx(by_n[128], rel=1e-6), tag

    def test_homogeneity(self, grid, bank):
        rng = np.random.default_rng(5)
        f = F.to_spectral(random_scalar(grid, rng))
        spec = LP.NormSpec("besov", s=0.5, p=4, q=3)
        a = LP.besov_norm(bank, f, spec)
        b = LP.besov_norm(bank, -2.5 * f, spec)
        assert b == pytest.approx(2.5 * a, rel=1e-12)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            LP.NormSpec("besov", p=0.5)
        with pytest.raises(ValueError):
            LP.NormSpec("hlog", alpha=0.0)
        with pytest.raises(ValueError):
            LP.NormSpec("nope")


class TestFourierHerz:
    def test_p2_matches_besov_p2(self, grid, bank):
        rng = np.random.default_rng(6)
        f = F.to_spectral(random_scalar(grid, rng))
        b = LP.besov_norm(bank, f, LP.NormSpec("besov", s=0.7, p=2, q=2))
        fh = LP.fourier_herz_norm(bank, f, LP.NormSpec("fourier_herz", s=0.7, p=2, q=2))
        assert fh == pytest.approx(b, rel=1e-10)

    def test_single_mode_value(self, grid, bank):
        f = plateau_mode_field(grid, 2)
        s, p = 1.0, 1.0
        val = LP.fourier_herz_norm(bank, f, LP.NormSpec("fourier_herz", s=s, p=p, q=1))
        coeff = np.abs(F.spectral_samples(f)).max()  # the +-k pair, equal magnitude
        mu = F.mode_measure(grid)
        assert val == pytest.approx(2.0 ** (2 * s) * 2 * coeff * mu, rel=1e-10)

    def test_p1_sums_to_full_spectral_l1(self, grid, bank):
        # exact partition: summing block L1 norms with q=1 telescopes
        def gaussian(x, y):
            return np.exp(-((x - np.pi) ** 2 + (y - np.pi) ** 2) * 2.0)

        f = F.ScalarField.from_function(grid, gaussian)
        val = LP.fourier_herz_norm(bank, f, LP.NormSpec("fourier_herz", s=0.0, p=1, q=1))
        direct = F.spectral_lp_norm(f, 1)
        assert val == pytest.approx(direct, rel=1e-6)


class TestHlog:
    def test_low_ring_value(self, grid, bank):
        f = plateau_mode_field(grid, 0)
        s = 0.8
        # ring 0 carries weight 2^{2*0*s} = 1 regardless of s
        assert LP.hlog_norm(bank, f, s=s) == pytest.approx(F.l2_norm(f), rel=1e-12)

    def test_ring4_l2log_weight(self, grid, bank):
        f = plateau_mode_field(grid, 4)
        assert LP.l2log_norm(bank, f) == pytest.approx(2.0 * F.l2_norm(f), rel=1e-12)

    def test_lower_bound_high_frequency(self, grid, bank):
        # weights >= 2 on rings >= 2 beat the mask-overlap loss there
        rng = np.random.default_rng(7)
        raw = F.to_spectral(random_scalar(grid, rng))
        high = F.ScalarField(grid, raw.data * (grid.kmag >= 2.0 ** 2), F.SPECTRAL)
        assert LP.l2log_norm(bank, high) >= (1 - 1e-6) * F.l2_norm(high)

    def test_alpha_monotone_on_high_frequency_content(self, grid, bank):
        rng = np.random.default_rng(8)
        raw = F.to_spectral(random_scalar(grid, rng))
        high = F.ScalarField(grid, raw.data * (grid.kmag >= 2.0 ** 2), F.SPECTRAL)
        a = LP.hlog_norm(bank, high, alpha=1.0)
        b = LP.hlog_norm(bank, high, alpha=1.5)
        assert b >= a * (1 - 1e-12)

    def test_alpha_validation(self, grid, bank):
        f = F.ScalarField.zeros(grid, F.SPECTRAL)
        with pytest.raises(ValueError):
            LP.hlog_norm(bank, f, alpha=-1.0)


class TestHomogeneity:
    def test_all_norm_families_absolutely_homogeneous(self, grid, bank):
        rng = np.random.default_rng(12)
        f = F.to_spectral(random_scalar(grid, rng))
        c = -3.25
        evaluations = {
            "besov": lambda g: LP.besov_norm(bank, g, LP.NormSpec("besov", s=0.5, p=4, q=3)),
            "fourier_herz": lambda g: LP.fourier_herz_norm(
                bank, g, LP.NormSpec("fourier_herz", s=-1.0, p=1, q=2)),
            "hlog": lambda g: LP.hlog_norm(bank, g, s=0.3, sigma=0.1, alpha=1.5),
            "chemin_lerner": lambda g: LP.chemin_lerner(
                bank, [g, 0.5 * g], [0.0, 1.0], LP.NormSpec("hlog"), 2),
        }
        for name, norm in evaluations.items():
            assert norm(c * f) == pytest.approx(abs(c) * norm(f), rel=1e-12), name


class TestCheminLerner:
    def test_constant_in_time_linf(self, grid, bank):
        rng = np.random.default_rng(9)
        f = F.to_spectral(random_scalar(grid, rng))
        times = np.linspace(0.0, 1.0, 5)
        spec = LP.NormSpec("hlog", s=0.0, sigma=0.0, alpha=1.0)
        val = LP.chemin_lerner(bank, [f] * 5, times, spec, np.inf)
        assert val == pytest.approx(LP.l2log_norm(bank, f), rel=1e-12)

    def test_separable_series(self, grid, bank):
        f = plateau_mode_field(grid, 3)
        times = np.linspace(0.0, 1.0, 201)
        amps = 1.0 + 0.5 * np.sin(2 * np.pi * times)
        series = [a * f for a in amps]
        spec = LP.NormSpec("hlog")
        v2 = LP.chemin_lerner(bank, series, times, spec, 2)
        a_l2 = np.sqrt(np.trapezoid(amps ** 2, times))
        assert v2 == pytest.approx(LP.l2log_norm(bank, f) * a_l2, rel=1e-12)
        vinf = LP.chemin_lerner(bank, series, times, spec, np.inf)
        assert vinf == pytest.approx(LP.l2log_norm(bank, f) * amps.max(), rel=1e-12)

    def test_linf_dominates_instants_single_block(self, grid, bank):
        f = plateau_mode_field(grid, 2)
        times = np.linspace(0.0, 1.0, 9)
        series = [np.cos(t) * f for t in times]
        spec = LP.NormSpec("hlog")
        vinf = LP.chemin_lerner(bank, series, times, spec, np.inf)
        for s in series:
            assert vinf >= LP.l2log_norm(bank, s) * (1 - 1e-12)

    def test_empty_series_rejected(self, grid, bank):
        with pytest.raises(ValueError):
            LP.chemin_lerner(bank, [], [], LP.NormSpec("hlog"), 2)


class TestBony:
    def test_separated_supports_land_in_t_uv(self, grid, bank):
        u = plateau_mode_field(grid, 0)
        v = plateau_mode_field(grid, 4, second_axis=1)
        pieces = LP.bony(bank, u, v)
        uv = u.data * v.data
        assert np.abs(pieces.t_uv.data - uv).max() <= 1e-8 * np.abs(uv).max()
        assert np.abs(pieces.t_vu.data).max() <= 1e-8 * np.abs(uv).max()
        assert np.abs(pieces.remainder.data).max() <= 1e-8 * np.abs(uv).max()

    def test_equal_rings_land_in_remainder(self, grid, bank):
        u = plateau_mode_field(grid, 3)
        v = plateau_mode_field(grid, 3, second_axis=2)
        pieces = LP.bony(bank, u, v)
        uv = u.data * v.data
        assert np.abs(pieces.remainder.data - uv).max() <= 1e-8 * np.abs(uv).max()

    def test_reconstruction_random(self, grid, bank):
        rng = np.random.default_rng(10)
        for _ in range(10):
            u = random_scalar(grid, rng, band_limit=True)
            v = random_scalar(grid, rng, band_limit=True)
            pieces = LP.bony(bank, u, v)
            uv = u.data * v.data
            err = np.linalg.norm(pieces.total().data - uv)
            assert err <= 1e-10 * np.linalg.norm(uv)


class TestBernstein:
    def test_gradient_ratio_band(self, bank):
        report = LP.bernstein_ratios(bank, trials=36, seed=0)
        assert report.spread((2.0, 2.0, 1)) <= 10.0

    def test_constant_field_low_block(self, grid, bank):
        f = F.ScalarField.from_samples(grid, np.ones((grid.n, grid.n)))
        b = LP.block(bank, f, bank.low_index)
        # the k=0 mode carries mask value 1 after renormalization
        assert F.l2_norm(b) == pytest.approx(F.l2_norm(f), rel=1e-12)

    def test_ratio_doubles_with_scale(self, grid, bank):
        rng = np.random.default_rng(11)
        means = {}
        for j in bank.ring_indices[1:-1]:
            vals = []
            for _ in range(12):
                f = LP.single_ring_field(bank, j, rng)
                fx, fy = F.grad(F.to_spectral(f))
                gn = np.sqrt(F.l2_norm(F.to_physical(fx)) ** 2 + F.l2_norm(F.to_physical(fy)) ** 2)
                vals.append(gn / F.l2_norm(f))
            means[j] = np.mean(vals)
        js = sorted(means)
        for a, b in zip(js, js[1:]):
            assert means[b] / means[a] == pytest.approx(2.0, rel=0.2)

    def test_requires_enough_trials(self, bank):
        with pytest.raises(ValueError):
            LP.bernstein_ratios(bank, trials=5)


def test_norm_report_csv_header():
    text = LP.norm_report_csv([("besov", 3, 1.25)])
    assert text.splitlines()[0] == "quantity,block_index,value"
    assert "besov,3,1.25" in text
