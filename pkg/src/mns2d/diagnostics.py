"""Experiment drivers and monitors for the conservation and regularity checks.

Each monitor is a pure function of a trajectory (or of explicit field
samples): re-running one on the same snapshots reproduces its CSV byte for
byte.  The quantities tracked are the ones the analysis bounds globally:
the energy balance and its dissipation integral, the orthogonality of the
Ohm/Lorentz work terms, the log-weighted borderline norms of the
electromagnetic pair, the time-integrated sup-norm and spectral-L1 masses of
the velocity, the localized (lattice) masses under both aggregations, and
the stability/approximation experiments (twin-run uniqueness with a
Gronwall-type envelope, mollified-data convergence, heat-kernel
characterization of the spectral norms).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields as F
from . import initial as I
from . import localize as L
from . import lpkit as LP
from . import solver as S


@dataclass
class ExperimentResult:
    """Uniform record of one experiment: tag, inputs, values, verdict, artifacts.

    Reproducible from (config, seed): rerunning the same configuration
    regenerates identical values and artifact hashes.
    """

    tag: str
    parameters: dict
    values: dict
    passed: bool | None = None
    tolerance: str = ""
    artifacts: list = field(default_factory=list)

    def csv(self) -> str:
        lines = ["field,key,value", f"tag,,{self.tag}"]
        for k, v in self.parameters.items():
            lines.append(f"parameter,{k},{v!r}")
        for k, v in self.values.items():
            lines.append(f"value,{k},{v!r}")
        lines.append(f"passed,,{self.passed}")
        lines.append(f"tolerance,,{self.tolerance}")
        for a in self.artifacts:
            lines.append(f"artifact,,{a}")
        return "\n".join(lines) + "\n"


def trajectory_from_snapshots(paths, config: S.SolverConfig) -> S.Trajectory:
    """Rebuild a monitor-consumable trajectory from saved snapshot files."""
    traj = S.Trajectory(config=config)
    for path in paths:
        state = F.read_snapshot(path)
        traj.times.append(state.t)
        traj.states.append(state)
        traj.snapshot_paths.append(str(path))
    if not traj.states:
        raise ValueError("no snapshots given")
    return traj


@dataclass
class EnergyLedger:
    """Per-sample energy balance: norms, dissipation, and identity defects."""

    times: np.ndarray
    u2: np.ndarray
    e2: np.ndarray
    b2: np.ndarray
    gradu2: np.ndarray
    j2: np.ndarray
    cum_diss: np.ndarray
    defect13: np.ndarray
    orth12: np.ndarray

    COLUMNS = ("t", "u2", "E2", "B2", "gradu2", "j2", "cum_diss", "defect13", "orth12")

    @staticmethod
    def from_records(records) -> "EnergyLedger":
        cols = {k: np.array([r[key] for r in records])
                for k, key in zip(
                    ("times", "u2", "e2", "b2", "gradu2", "j2", "cum_diss", "defect13", "orth12"),
                    ("t", "u2", "E2", "B2", "gradu2", "j2", "cum_diss", "defect13", "orth12"),
                )}
        return EnergyLedger(**cols)

    def csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        arrays = (self.times, self.u2, self.e2, self.b2, self.gradu2,
                  self.j2, self.cum_diss, self.defect13, self.orth12)
        for row in zip(*arrays):
            lines.append(",".join(repr(v) for v in row))
        return "\n".join(lines) + "\n"

    def check(self, defect_tol: float, orth_tol: float = 1e-12) -> None:
        if self.defect13.max() > defect_tol:
            raise AssertionError(f"energy defect {self.defect13.max():.3e} > {defect_tol:.1e}")
        if self.orth12.max() > orth_tol:
            raise AssertionError(f"orthogonality defect {self.orth12.max():.3e} > {orth_tol:.1e}")


def energy_monitor(traj: S.Trajectory) -> EnergyLedger:
    """Recompute the ledger from the snapshot stream (cadence resolution)."""
    records = []
    prev = None
    for state in traj.states:
        prev = S._state_record(state, traj.config, prev)
        records.append(prev)
    return EnergyLedger.from_records(records)


def ledger_from_run(traj: S.Trajectory) -> EnergyLedger:
    """The per-step ledger recorded during integration."""
    return EnergyLedger.from_records(traj.records)


@dataclass
class BorderlineReport:
    """Cumulative time series of every globally-bounded borderline quantity."""

    times: np.ndarray
    eb_cl_l2log: np.ndarray       # ||(E,B)|| in the block-sup-in-time log space
    int_j_l2log: np.ndarray       # int_0^t ||j||_{L2log}^2
    int_u_linf: np.ndarray        # int_0^t ||u||_inf^2
    int_uhat_l1: np.ndarray       # int_0^t ||uhat||_{L1}^2
    morrey_sup: np.ndarray        # running sup_j 2^{2j} int (largest cell mass)
    u_cl_b022: np.ndarray         # ||u|| block-sup-in-time, flat l2 block sum

    COLUMNS = ("t", "eb_cl_l2log", "int_j_l2log", "int_u_linf", "int_uhat_l1",
               "morrey_sup", "u_cl_b022")

    def csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in zip(self.times, self.eb_cl_l2log, self.int_j_l2log,
                       self.int_u_linf, self.int_uhat_l1, self.morrey_sup,
                       self.u_cl_b022):
            lines.append(",".join(repr(v) for v in row))
        return "\n".join(lines) + "\n"

    def final(self) -> dict:
        return {
            "eb_cl_l2log": float(self.eb_cl_l2log[-1]),
            "int_j_l2log": float(self.int_j_l2log[-1]),
            "int_u_linf": float(self.int_u_linf[-1]),
            "int_uhat_l1": float(self.int_uhat_l1[-1]),
            "morrey_sup": float(self.morrey_sup[-1]),
            "u_cl_b022": float(self.u_cl_b022[-1]),
        }


def _vec_block_sq(bank: LP.DyadicFilterBank, v: F.VectorField) -> np.ndarray:
    sv = F.vec_as_spectral(v)
    out = np.zeros(len(bank.indices))
    for c in range(3):
        norms = LP.block_l2_norms(bank, sv.component(c))
        out += np.array([norms[j] ** 2 for j in bank.indices])
    return out


def vec_spectral_l1(v: F.VectorField) -> float:
    """L1 norm over modes of the pointwise-Euclidean spectral magnitude."""
    sv = F.vec_as_spectral(v)
    mags = np.sqrt(sum(np.abs(F.spectral_samples(sv.component(c))) ** 2 for c in range(3)))
    return float(F.mode_measure(v.grid) * mags.sum())


def borderline_monitor(traj: S.Trajectory, bank: LP.DyadicFilterBank,
                       pous) -> BorderlineReport:
    """Every globally-bounded quantity, cumulatively along the snapshots."""
    idx = bank.indices
    weights = np.array([LP._hlog_weight(j, 0.0, 0.0, 1.0) for j in idx])
    times = np.asarray(traj.times)
    nt = len(times)

    eb_blocks_run = np.zeros(len(idx))
    u_blocks_run = np.zeros(len(idx))
    j_l2log_sq = np.zeros(nt)
    u_linf_sq = np.zeros(nt)
    uhat_l1_sq = np.zeros(nt)
    morrey_cells = {pou.j: np.zeros(nt) for pou in pous}

    eb_cl = np.zeros(nt)
    u_cl = np.zeros(nt)
    for i, state in enumerate(traj.states):
        eb_blocks = _vec_block_sq(bank, state.E) + _vec_block_sq(bank, state.B)
        eb_blocks_run = np.maximum(eb_blocks_run, eb_blocks)
        eb_cl[i] = np.sqrt(float(weights @ eb_blocks_run))

        u_blocks = _vec_block_sq(bank, state.u)
        u_blocks_run = np.maximum(u_blocks_run, u_blocks)
        u_cl[i] = np.sqrt(float(u_blocks_run.sum()))

        j = S.ohm_current(state, traj.config.dealias)
        j_l2log_sq[i] = LP.vec_l2log_norm(bank, j) ** 2
        u_linf_sq[i] = F.vec_linf_norm(state.u) ** 2
        uhat_l1_sq[i] = vec_spectral_l1(state.u) ** 2
        for pou in pous:
            morrey_cells[pou.j][i] = L.loc_sup(state.u, pou, "sqrt-bump") ** 2

    def cum(series):
        out = np.zeros(nt)
        if nt > 1:
            out[1:] = np.cumsum(0.5 * (series[1:] + series[:-1]) * np.diff(times))
        return out

    morrey_run = np.zeros(nt)
    for pou in pous:
        morrey_run = np.maximum(morrey_run, pou.scale ** 2 * cum(morrey_cells[pou.j]))

    return BorderlineReport(
        times=times,
        eb_cl_l2log=eb_cl,
        int_j_l2log=cum(j_l2log_sq),
        int_u_linf=cum(u_linf_sq),
        int_uhat_l1=cum(uhat_l1_sq),
        morrey_sup=morrey_run,
        u_cl_b022=u_cl,
    )


@dataclass
class HeatReport:
    """Exact-flow heat run: energy balance defect and localized masses."""

    times: np.ndarray
    energy_defect: float
    morrey_sum: L.MorreyReport
    morrey_sup: L.MorreyReport
    int_fhat_l1_sq: float

    def csv(self) -> str:
        lines = ["quantity,value", f"energy_defect,{self.energy_defect!r}",
                 f"int_fhat_l1_sq,{self.int_fhat_l1_sq!r}"]
        for j, v in sorted(self.morrey_sum.per_scale.items()):
            lines.append(f"morrey_sum_j={j},{v!r}")
        for j, v in sorted(self.morrey_sup.per_scale.items()):
            lines.append(f"morrey_sup_j={j},{v!r}")
        lines.append(f"morrey_sum_overall,{self.morrey_sum.overall!r}")
        lines.append(f"morrey_sup_overall,{self.morrey_sup.overall!r}")
        return "\n".join(lines) + "\n"


def heat_flow(f0: F.ScalarField, t: float) -> F.ScalarField:
    s = F.as_spectral(f0)
    return F.ScalarField(f0.grid, s.data * np.exp(-f0.grid.ksq * t), F.SPECTRAL)


def heat_dissipation_exact(f0: F.ScalarField, t: float) -> float:
    """Closed-form int_0^t ||grad f||^2 under the exact heat flow."""
    s = F.as_spectral(f0)
    g = f0.grid
    w = g.length ** 2 / g.n ** 4
    return float(w * np.sum(np.abs(s.data) ** 2 * 0.5 * (1.0 - np.exp(-2.0 * g.ksq * t))))


def heat_experiment(f0: F.ScalarField, t_final: float, bank: LP.DyadicFilterBank,
                    pous, n_samples: int = 41) -> HeatReport:
    """Evolve the heat equation exactly per mode and audit its estimates."""
    times = np.linspace(0.0, t_final, n_samples)
    states = [heat_flow(f0, t) for t in times]
    e0 = F.l2_norm(f0) ** 2
    eT = F.l2_norm(states[-1]) ** 2
    defect = abs(eT + 2.0 * heat_dissipation_exact(f0, t_final) - e0) / e0 if e0 > 0 else 0.0

    l1sq = np.array([F.spectral_lp_norm(s, 1) ** 2 for s in states])
    int_l1 = float(np.trapezoid(l1sq, times))

    return HeatReport(
        times=times,
        energy_defect=float(defect),
        morrey_sum=L.morrey_quantity(states, times, pous, "sum"),
        morrey_sup=L.morrey_quantity(states, times, pous, "sup"),
        int_fhat_l1_sq=int_l1,
    )


@dataclass
class TrilinearReport:
    """Measured two-sided values of the trilinear product bound."""

    cutoff: int
    ratios: list
    lhs_values: list
    rhs_values: list
    vacuous: int = 0
    note: str = (
        "second and third bound terms share the low-pass sup factor and "
        "differ only by the explicit cutoff multiplier versus the spectral "
        "tail restriction"
    )

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def csv(self) -> str:
        lines = ["trial,lhs,rhs,ratio"]
        for i, (lh, rh, ra) in enumerate(zip(self.lhs_values, self.rhs_values, self.ratios)):
            lines.append(f"{i},{lh!r},{rh!r},{ra!r}")
        lines.append(f"max,,,{self.max_ratio!r}")
        return "\n".join(lines) + "\n"


def _random_series(grid: F.Grid, rng, times) -> list[F.ScalarField]:
    base_a = F.dealias(F.to_spectral(F.ScalarField.from_samples(
        grid, rng.standard_normal((grid.n, grid.n)))))
    base_b = F.dealias(F.to_spectral(F.ScalarField.from_samples(
        grid, rng.standard_normal((grid.n, grid.n)))))
    om1, om2 = rng.uniform(0.5, 4.0, 2)
    return [
        F.to_physical(np.cos(om1 * t) * base_a + np.sin(om2 * t) * base_b)
        for t in times
    ]


def _sup_lowpass_l2t_linf(bank, series_spec, times) -> float:
    sup_val = 0.0
    for j in bank.indices + [bank.indices[-1] + 1]:
        vals = [F.lp_norm(F.to_physical(LP.low_pass(bank, s, j)), np.inf) ** 2
                for s in series_spec]
        sup_val = max(sup_val, float(np.sqrt(np.trapezoid(vals, times))))
    return sup_val


def trilinear_bound(bank: LP.DyadicFilterBank, fs, gs, hs, times, cutoff: int):
    """One trilinear comparison: (int int f g h, three-term right side).

    The right side is ||f|| ||grad g|| ||h|| in their time norms, plus the
    cutoff-weighted low-pass term, plus the spectral-tail term restricted to
    block indices of magnitude at least the cutoff.
    """
    grid = bank.grid
    times = np.asarray(times, dtype=float)
    fs_spec = [F.to_spectral(s) for s in fs]
    gs_spec = [F.to_spectral(s) for s in gs]
    hs_spec = [F.to_spectral(s) for s in hs]

    prod = [F.integral(F.ScalarField(grid, a.data * b.data * c.data, F.PHYSICAL))
            for a, b, c in zip(fs, gs, hs)]
    lhs = float(np.trapezoid(prod, times))

    f_l2t = np.sqrt(np.trapezoid([F.l2_norm(s) ** 2 for s in fs], times))
    gradg = []
    for s in gs_spec:
        gx, gy = F.grad(s)
        gradg.append(F.l2_norm(gx) ** 2 + F.l2_norm(gy) ** 2)
    gradg_l2t = np.sqrt(np.trapezoid(gradg, times))
    h_linf_l2 = max(F.l2_norm(s) for s in hs)

    sup_sg = _sup_lowpass_l2t_linf(bank, gs_spec, times)

    # h in the block-sup-in-time flat l2 block space
    h_blocks = np.zeros(len(bank.indices))
    for s in hs_spec:
        norms = LP.block_l2_norms(bank, s)
        h_blocks = np.maximum(h_blocks, np.array([norms[j] ** 2 for j in bank.indices]))
    h_cl = float(np.sqrt(h_blocks.sum()))

    tail_sq = 0.0
    for j in bank.indices:
        if abs(j) >= cutoff:
            vals = [LP.block_l2_norms(bank, s)[j] ** 2 for s in fs_spec]
            tail_sq += float(np.trapezoid(vals, times))
    tail = np.sqrt(tail_sq)

    rhs = (
        f_l2t * gradg_l2t * h_linf_l2
        + 2.0 * cutoff * sup_sg * f_l2t * h_linf_l2
        + sup_sg * h_cl * tail
    )
    return lhs, float(rhs)


def trilinear_check(bank: LP.DyadicFilterBank, trials: int, cutoff: int,
                    seed: int = 0, n_times: int = 9) -> TrilinearReport:
    """Max over random trials of |int int f g h| / (three-term bound)."""
    grid = bank.grid
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, n_times)
    report = TrilinearReport(cutoff=cutoff, ratios=[], lhs_values=[], rhs_values=[])
    for _ in range(trials):
        fs = _random_series(grid, rng, times)
        gs = _random_series(grid, rng, times)
        hs = _random_series(grid, rng, times)
        lhs, rhs = trilinear_bound(bank, fs, gs, hs, times, cutoff)
        report.lhs_values.append(lhs)
        report.rhs_values.append(rhs)
        if rhs == 0.0:
            report.vacuous += 1
        else:
            report.ratios.append(abs(lhs) / rhs)
    return report


@dataclass
class UniquenessReport:
    """Twin-run separation against the run-fitted Gronwall-type envelope."""

    delta: float
    times: np.ndarray
    separation: np.ndarray       # D(t) = ||du||^2 + ||(dE, dB)||_{L2log}^2
    rate_integral: np.ndarray    # R(t) = int (||(B,j)||_{L2log}^2 + ||u||_inf^2 + ||grad u~||^2)
    fitted_rate: float
    max_envelope_ratio: float    # max_t D(t) / (D(0) e^{fitted R(t)})
    identical: bool | None = None

    def csv(self) -> str:
        lines = ["t,separation,rate_integral"]
        for row in zip(self.times, self.separation, self.rate_integral):
            lines.append(",".join(repr(v) for v in row))
        lines.append(f"fitted_rate,,{self.fitted_rate!r}")
        lines.append(f"max_envelope_ratio,,{self.max_envelope_ratio!r}")
        return "\n".join(lines) + "\n"


def uniqueness_experiment(init: F.State, config: S.SolverConfig, delta: float,
                          bank: LP.DyadicFilterBank,
                          perturb_seed: int = 777) -> UniquenessReport:
    """Run twin trajectories differing by delta in the initial data.

    delta = 0 runs the same data twice and asserts byte identity of the
    records.  delta > 0 tracks the separation D(t) and fits the exponent of
    the Gronwall-type envelope built from the runs' own monitored norms:
    the slope of log D against R(t) = int (||(B, j)||_{L2log}^2 +
    ||u||_inf^2 + ||grad u~||^2) dtau.
    """
    base = S.run(config, init)
    times = np.asarray(base.times)
    if delta == 0.0:
        twin = S.run(config, init)
        identical = S.records_csv(base.records) == S.records_csv(twin.records)
        return UniquenessReport(
            delta=0.0, times=times, separation=np.zeros(len(times)),
            rate_integral=np.zeros(len(times)), fitted_rate=0.0,
            max_envelope_ratio=1.0, identical=identical,
        )

    pu, pe, pb = I.generate_initial(init.grid, perturb_seed, normalize=True)
    init2 = F.State(
        t=init.t,
        u=F.VectorField(init.grid, init.u.data + delta * pu.data, F.SPECTRAL),
        E=F.VectorField(init.grid, init.E.data + delta * pe.data, F.SPECTRAL),
        B=F.VectorField(init.grid, init.B.data + delta * pb.data, F.SPECTRAL),
    )
    pert = S.run(config, init2)

    nt = len(times)
    sep = np.zeros(nt)
    integrand = np.zeros(nt)
    for i, (sa, sb) in enumerate(zip(base.states, pert.states)):
        du = F.VectorField(init.grid, sb.u.data - sa.u.data, F.SPECTRAL)
        de = F.VectorField(init.grid, sb.E.data - sa.E.data, F.SPECTRAL)
        db = F.VectorField(init.grid, sb.B.data - sa.B.data, F.SPECTRAL)
        sep[i] = (
            F.vec_l2_norm(du) ** 2
            + LP.vec_l2log_norm(bank, de) ** 2
            + LP.vec_l2log_norm(bank, db) ** 2
        )
        j = S.ohm_current(sa, config.dealias)
        integrand[i] = (
            LP.vec_l2log_norm(bank, sa.B) ** 2
            + LP.vec_l2log_norm(bank, j) ** 2
            + F.vec_linf_norm(sa.u) ** 2
            + F.vec_grad_norm_sq(sb.u)
        )
    rate_int = np.zeros(nt)
    rate_int[1:] = np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))

    mask = sep > 0
    y = np.log(sep[mask] / sep[0])
    r = rate_int[mask]
    fitted = float((r @ y) / (r @ r)) if np.any(r > 0) else 0.0
    envelope = sep[0] * np.exp(fitted * rate_int)
    max_ratio = float((sep / envelope).max())
    return UniquenessReport(
        delta=delta, times=times, separation=sep, rate_integral=rate_int,
        fitted_rate=fitted, max_envelope_ratio=max_ratio,
    )


@dataclass
class GalerkinReport:
    """Differences between consecutive mollification levels."""

    levels: list
    u_diffs: list          # sup_t ||u^{N_{i+1}} - u^{N_i}||_{L2}
    eb_diffs: list         # block-sup-in-time flat l2 of (dE, dB)

    def strictly_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.u_diffs, self.u_diffs[1:])) and all(
            a > b for a, b in zip(self.eb_diffs, self.eb_diffs[1:])
        )

    def csv(self) -> str:
        lines = ["pair,u_diff,eb_diff"]
        for i, (ud, ed) in enumerate(zip(self.u_diffs, self.eb_diffs)):
            lines.append(f"{self.levels[i]}->{self.levels[i+1]},{ud!r},{ed!r}")
        return "\n".join(lines) + "\n"


def galerkin_experiment(init: F.State, config: S.SolverConfig, levels,
                        bank: LP.DyadicFilterBank) -> GalerkinReport:
    """Integrate mollified initial data at increasing cutoff levels.

    The truncated problems approximate each other like their data, so the
    differences between consecutive levels should decrease monotonically.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ValueError("need at least 3 mollification levels")
    trajs = []
    for lev in levels:
        cfg = S.SolverConfig(
            dt=config.dt, t_final=config.t_final, dealias=config.dealias,
            mollify_level=lev, output_every=config.output_every,
            seed=config.seed, freeze_velocity=config.freeze_velocity,
        )
        trajs.append(S.run(cfg, init, bank=bank))

    u_diffs, eb_diffs = [], []
    for ta, tb in zip(trajs, trajs[1:]):
        du_sup = 0.0
        blocks = np.zeros(len(bank.indices))
        for sa, sb in zip(ta.states, tb.states):
            du = F.VectorField(init.grid, sb.u.data - sa.u.data, F.SPECTRAL)
            du_sup = max(du_sup, F.vec_l2_norm(du))
            de = F.VectorField(init.grid, sb.E.data - sa.E.data, F.SPECTRAL)
            db = F.VectorField(init.grid, sb.B.data - sa.B.data, F.SPECTRAL)
            blocks = np.maximum(blocks, _vec_block_sq(bank, de) + _vec_block_sq(bank, db))
        u_diffs.append(float(du_sup))
        eb_diffs.append(float(np.sqrt(blocks.sum())))
    return GalerkinReport(levels=levels, u_diffs=u_diffs, eb_diffs=eb_diffs)


@dataclass
class HeatCharacterizationReport:
    """Heat-kernel evaluation of the spectral-L^p dyadic norm."""

    s: float
    p: float
    r: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else np.inf

    def csv(self) -> str:
        return (
            "s,p,r,lhs,rhs,ratio\n"
            f"{self.s!r},{self.p!r},{self.r!r},{self.lhs!r},{self.rhs!r},{self.ratio!r}\n"
        )


class QuadratureRangeError(ValueError):
    """The t-quadrature window does not cover the field's spectral support."""


def fourier_herz_heat_check(f: F.ScalarField, s: float, p: float, r: float,
                            bank: LP.DyadicFilterBank,
                            nodes_per_octave: int = 64) -> HeatCharacterizationReport:
    """Compare || t^s || e^{-t |xi|^2} fhat ||_{L^p} ||_{L^r(dt/t)} to the
    dyadic spectral norm with smoothness -2s.

    The t-quadrature is log-spaced with a fixed node count per octave over a
    window spanning the grid's dyadic range with margin; the density matches
    the dt/t measure.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    grid = f.grid
    j_lo, j_hi = bank.ring_indices[0], bank.ring_indices[-1]
    t_min = 2.0 ** (-2 * (j_hi + 5))
    t_max = 2.0 ** (-2 * (j_lo - 5))
    n_nodes = int(np.ceil(np.log2(t_max / t_min) * nodes_per_octave))
    ts = np.geomspace(t_min, t_max, n_nodes)
    dlnt = np.log(ts[1] / ts[0])

    coeffs = np.abs(F.spectral_samples(f))
    mu = F.mode_measure(grid)
    ksq = grid.ksq

    def heat_lp(t):
        decayed = coeffs * np.exp(-t * ksq)
        if p == np.inf:
            return decayed.max()
        return (mu * np.sum(decayed ** p)) ** (1.0 / p)

    vals = np.array([t ** s * heat_lp(t) for t in ts])
    peak = vals.max()
    if r == np.inf:
        # the sup must be attained inside the window, not at its rim
        if peak > 0 and max(vals[0], vals[-1]) > 0.99 * peak:
            raise QuadratureRangeError(
                "quadrature window too narrow for the field's spectral support"
            )
        lhs = float(peak)
    else:
        powered = vals ** r
        total = float(np.trapezoid(powered, np.log(ts)))
        # truncation estimates: the small-t tail grows like t^{rs}, the
        # large-t tail must have decayed out of the window; the thresholds
        # keep the truncation below 0.1% of the integral
        low_tail = powered[0] / (r * s)
        if total > 0 and (low_tail > 1e-3 * total or powered[-1] > 1e-6 * total):
            raise QuadratureRangeError(
                "quadrature window too narrow for the field's spectral support"
            )
        lhs = float(total ** (1.0 / r))

    spec = LP.NormSpec("fourier_herz", s=-2.0 * s, p=p, q=r)
    rhs = LP.fourier_herz_norm(bank, f, spec)
    return HeatCharacterizationReport(s=s, p=p, r=r, lhs=lhs, rhs=float(rhs))


def heat_weight_scale_sum(s: float, c: float, j_half_width: int, n_t: int = 256) -> float:
    """sup over sampled t of sum_j t^s 2^{2js} e^{-c t 2^{2j}}.

    The infinite sum is log-periodic under t -> t/4, so sampling t over one
    period [1, 4) captures the sup once the j window is wide enough.
    """
    js = np.arange(-j_half_width, j_half_width + 1)
    ts = np.geomspace(1.0, 4.0, n_t, endpoint=False)
    four_j = 4.0 ** js
    vals = [float(np.sum(t ** s * four_j ** s * np.exp(-c * t * four_j))) for t in ts]
    return max(vals)
