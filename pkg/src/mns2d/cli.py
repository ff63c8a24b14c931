"""Configuration, experiment orchestration, and command-line entry point.

Run configurations are flat ``key = value`` text: one assignment per line,
``#`` comments, unknown keys rejected with their line number.  The canonical
serialization writes every key in a fixed order, so configurations round-trip
bijectively and diff cleanly.  Every experiment writes its delimited output,
a rendered figure, and a manifest echoing the configuration together with
FNV-1a content hashes of all outputs; a rerun of the same configuration
reproduces the hashes byte for byte.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as D
from . import fields as F
from . import initial as I
from . import localize as L
from . import lpkit as LP
from . import plotting as P
from . import solver as S
from .initial import SeededGenerator, generate_initial  # re-exported interface

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

EXPERIMENTS = (
    "run", "energy", "borderline", "heat-check", "trilinear",
    "perturb", "galerkin", "a2-check",
)


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _parse_levels(text: str):
    if text == "auto":
        return "auto"
    return tuple(int(tok) for tok in text.split(","))


def _show_levels(levels) -> str:
    return levels if levels == "auto" else ",".join(str(v) for v in levels)


def _parse_cells(text: str):
    return tuple(int(tok) for tok in text.split(","))


@dataclass
class RunConfig:
    """Flat configuration for one experiment run."""

    n: int = 64
    length: float = 32.0 * math.pi
    dt: float = 1e-3
    t_final: float = 1.0
    seed: int = 0
    mollify_n: int | None = None
    out_dir: str = "out"
    every: int = 10
    experiment: str = "energy"
    init_a: float = 1.0
    init_k0frac: float = 0.125
    init_normalize: bool = True
    init_amplitude: float = 1.0
    perturb_delta: float = 1e-8
    perturb_seed: int = 777
    galerkin_levels: object = "auto"
    trilinear_trials: int = 20
    trilinear_cutoff: int = 2
    a2_trials: int = 30
    heat_sigma: float = 1.0
    heat_samples: int = 41
    pou_cells: tuple = (8, 16, 32)

    def grid(self) -> F.Grid:
        return F.Grid(self.n, self.length)

    def solver_config(self) -> S.SolverConfig:
        return S.SolverConfig(
            dt=self.dt, t_final=self.t_final, mollify_level=self.mollify_n,
            output_every=self.every, seed=self.seed,
        )

    def initial_state(self, grid=None) -> F.State:
        grid = grid or self.grid()
        k0 = self.init_k0frac * self.n * grid.kmin
        u, e, b = generate_initial(
            grid, self.seed, a=self.init_a, k0=k0,
            normalize=self.init_normalize, amplitude=self.init_amplitude,
        )
        return F.State(t=0.0, u=u, E=e, B=b)

    def partitions(self, grid) -> list:
        return [L.build_partition_cells(grid, m) for m in self.pou_cells if m <= grid.n]

    def to_text(self) -> str:
        lines = [f"{key} = {show(getattr(self, attr))}" for key, (attr, _, show) in _SCHEMA.items()]
        return "\n".join(lines) + "\n"


def _show_optional_int(v) -> str:
    return "none" if v is None else str(v)


def _parse_optional_int(text: str):
    return None if text == "none" else int(text)


_SCHEMA: dict = {
    "grid.n": ("n", int, str),
    "grid.L": ("length", float, repr),
    "dt": ("dt", float, repr),
    "T": ("t_final", float, repr),
    "seed": ("seed", int, str),
    "mollify.N": ("mollify_n", _parse_optional_int, _show_optional_int),
    "output.dir": ("out_dir", str, str),
    "output.every": ("every", int, str),
    "experiment": ("experiment", str, str),
    "init.a": ("init_a", float, repr),
    "init.k0frac": ("init_k0frac", float, repr),
    "init.normalize": ("init_normalize", _parse_bool, lambda v: "true" if v else "false"),
    "init.amplitude": ("init_amplitude", float, repr),
    "perturb.delta": ("perturb_delta", float, repr),
    "perturb.seed": ("perturb_seed", int, str),
    "galerkin.levels": ("galerkin_levels", _parse_levels, _show_levels),
    "trilinear.trials": ("trilinear_trials", int, str),
    "trilinear.N": ("trilinear_cutoff", int, str),
    "a2.trials": ("a2_trials", int, str),
    "heat.sigma": ("heat_sigma", float, repr),
    "heat.samples": ("heat_samples", int, str),
    "pou.cells": ("pou_cells", _parse_cells, lambda v: ",".join(str(m) for m in v)),
}


def parse_config(text: str) -> RunConfig:
    """Parse the flat key=value format; errors carry the offending line number."""
    config = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, parse, _ = _SCHEMA[key]
        try:
            setattr(config, attr, parse(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    if config.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    return config


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def fnv1a(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def fnv1a_file(path) -> int:
    h = FNV_OFFSET
    mask = 0xFFFFFFFFFFFFFFFF
    with open(path, "rb") as fh:
        while chunk := fh.read(1 << 16):
            for b in chunk:
                h = ((h ^ b) * FNV_PRIME) & mask
    return h


def _write(path: Path, text: str):
    path.write_text(text)
    return path


def _auto_levels(bank: LP.DyadicFilterBank):
    rings = bank.ring_indices
    if len(rings) >= 5:
        return rings[-5:-1]
    return rings[:-1][-4:] if len(rings) > 4 else rings[:4]


def orchestrate(config: RunConfig, out_dir=None):
    """Build the pieces, dispatch the tagged experiment, write the manifest.

    Returns (exit_status, output directory).  Numeric aborts propagate the
    blow-up snapshot path in the raised error; everything else lands in the
    output directory with its hash recorded in manifest.txt.
    """
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.grid()
    outputs: list[Path] = []

    experiment = config.experiment
    if experiment in ("run", "energy", "borderline", "perturb", "galerkin"):
        init = config.initial_state(grid)
    bank = LP.build_filter_bank(grid)

    try:
        result = _dispatch(config, experiment, grid, bank,
                           init if experiment in ("run", "energy", "borderline",
                                                  "perturb", "galerkin") else None,
                           out, outputs)
    except S.BlowUpError as exc:
        snap = out / "blowup.mns2"
        if exc.state is not None:
            F.write_snapshot(snap, exc.state)
        raise S.BlowUpError(f"{exc}; diagnostic snapshot at {snap}", state=exc.state) from exc

    result.artifacts = [p.name for p in sorted(outputs)]
    outputs.append(_write(out / "result.csv", result.csv()))

    manifest = [
        "mns2d manifest v1",
        f"package = {__version__}",
        f"python = {sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
        f"numpy = {np.__version__}",
        "",
        "[config]",
        config.to_text().rstrip("\n"),
        "",
        "[outputs]",
    ]
    for path in sorted(outputs):
        manifest.append(f"{path.name} = {fnv1a_file(path):016x}")
    _write(out / "manifest.txt", "\n".join(manifest) + "\n")
    return 0, str(out)


def _dispatch(config: RunConfig, experiment, grid, bank, init, out, outputs) -> D.ExperimentResult:
    params = {"n": config.n, "L": config.length, "dt": config.dt,
              "T": config.t_final, "seed": config.seed}
    if experiment == "run":
        traj = S.run(config.solver_config(), init, output_dir=str(out), bank=bank)
        outputs.extend(Path(p) for p in traj.snapshot_paths)
        outputs.append(_write(out / "run_ledger.csv", S.records_csv(traj.records)))
        ledger = D.ledger_from_run(traj)
        P.energy_figure(ledger, out / "run_energy.png")
        outputs.append(out / "run_energy.png")
        tol = 100.0 * config.dt ** 2
        return D.ExperimentResult(
            "run", params,
            {"defect13": float(ledger.defect13.max()), "orth12": float(ledger.orth12.max())},
            passed=bool(ledger.defect13.max() <= tol and ledger.orth12.max() <= 1e-12),
            tolerance=f"defect13 <= {tol:.3e}; orth12 <= 1e-12",
        )
    if experiment == "energy":
        traj = S.run(config.solver_config(), init, bank=bank)
        ledger = D.ledger_from_run(traj)
        outputs.append(_write(out / "energy_ledger.csv", ledger.csv()))
        P.energy_figure(ledger, out / "energy.png")
        outputs.append(out / "energy.png")
        tol = 100.0 * config.dt ** 2
        return D.ExperimentResult(
            "energy", params,
            {"defect13": float(ledger.defect13.max()), "orth12": float(ledger.orth12.max())},
            passed=bool(ledger.defect13.max() <= tol and ledger.orth12.max() <= 1e-12),
            tolerance=f"defect13 <= {tol:.3e}; orth12 <= 1e-12",
        )
    if experiment == "borderline":
        traj = S.run(config.solver_config(), init, bank=bank)
        report = D.borderline_monitor(traj, bank, config.partitions(grid))
        outputs.append(_write(out / "borderline.csv", report.csv()))
        P.borderline_figure(report, out / "borderline.png")
        outputs.append(out / "borderline.png")
        finals = report.final()
        return D.ExperimentResult(
            "borderline", params, finals,
            passed=bool(all(np.isfinite(v) for v in finals.values())),
            tolerance="all monitored quantities finite",
        )
    if experiment == "heat-check":
        half = grid.length / 2.0
        f0 = F.ScalarField.from_function(
            grid,
            lambda x, y: np.exp(-((x - half) ** 2 + (y - half) ** 2)
                                / (2.0 * config.heat_sigma ** 2)),
        )
        report = D.heat_experiment(f0, config.t_final, bank,
                                   config.partitions(grid), config.heat_samples)
        outputs.append(_write(out / "heat_check.csv", report.csv()))
        P.heat_figure(report, out / "heat_check.png")
        outputs.append(out / "heat_check.png")
        return D.ExperimentResult(
            "heat-check", {**params, "sigma": config.heat_sigma},
            {"energy_defect": report.energy_defect,
             "morrey_sup": report.morrey_sup.overall,
             "morrey_sum": report.morrey_sum.overall},
            passed=bool(report.energy_defect <= 1e-10),
            tolerance="energy defect <= 1e-10 (exact multiplier)",
        )
    if experiment == "trilinear":
        report = D.trilinear_check(bank, config.trilinear_trials,
                                   config.trilinear_cutoff, seed=config.seed)
        outputs.append(_write(out / "trilinear.csv", report.csv()))
        P.trilinear_figure(report, out / "trilinear.png")
        outputs.append(out / "trilinear.png")
        return D.ExperimentResult(
            "trilinear", {**params, "trials": config.trilinear_trials,
                          "cutoff": config.trilinear_cutoff},
            {"max_ratio": report.max_ratio, "vacuous": report.vacuous},
            passed=bool(np.isfinite(report.max_ratio)),
            tolerance="max |LHS|/RHS finite (band recorded)",
        )
    if experiment == "perturb":
        report = D.uniqueness_experiment(init, config.solver_config(),
                                         config.perturb_delta, bank,
                                         perturb_seed=config.perturb_seed)
        outputs.append(_write(out / "perturb.csv", report.csv()))
        P.perturb_figure(report, out / "perturb.png")
        outputs.append(out / "perturb.png")
        if config.perturb_delta == 0.0:
            passed, tol = bool(report.identical), "twin runs byte-identical"
        else:
            passed, tol = bool(report.max_envelope_ratio <= 1.5), "separation <= 1.5 x fitted envelope"
        return D.ExperimentResult(
            "perturb", {**params, "delta": config.perturb_delta},
            {"fitted_rate": report.fitted_rate,
             "max_envelope_ratio": report.max_envelope_ratio,
             "identical": report.identical},
            passed=passed, tolerance=tol,
        )
    if experiment == "galerkin":
        levels = config.galerkin_levels
        if levels == "auto":
            levels = _auto_levels(bank)
        report = D.galerkin_experiment(init, config.solver_config(), levels, bank)
        outputs.append(_write(out / "galerkin.csv", report.csv()))
        P.galerkin_figure(report, out / "galerkin.png")
        outputs.append(out / "galerkin.png")
        return D.ExperimentResult(
            "galerkin", {**params, "levels": list(levels)},
            {"u_diffs": report.u_diffs, "eb_diffs": report.eb_diffs},
            passed=bool(report.strictly_decreasing()),
            tolerance="consecutive-level differences strictly decreasing",
        )
    # a2-check
    rng = np.random.default_rng(config.seed)
    rows = []
    for trial in range(config.a2_trials):
        raw = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
        spec = F.dealias(F.to_spectral(raw)).copy()
        spec.data[0, 0] = 0.0
        f = F.to_physical(spec)
        for s, p, r in ((0.5, 1.0, 2.0), (1.0, 2.0, 2.0), (0.5, 2.0, np.inf)):
            rep = D.fourier_herz_heat_check(f, s, p, r, bank)
            rows.append((f"trial{trial}_s{s}_p{p}_r{r}", rep.ratio))
    scale_sums = {j: D.heat_weight_scale_sum(1.0, 1.0, j) for j in (8, 16, 32, 64)}
    lines = ["label,ratio"]
    lines += [f"{label},{ratio!r}" for label, ratio in rows]
    lines += [f"heat_weight_sum_J{j},{v!r}" for j, v in sorted(scale_sums.items())]
    outputs.append(_write(out / "a2_check.csv", "\n".join(lines) + "\n"))
    P.a2_figure(rows, out / "a2_check.png")
    outputs.append(out / "a2_check.png")
    ratios = [r for _, r in rows]
    return D.ExperimentResult(
        "a2-check", {**params, "trials": config.a2_trials},
        {"ratio_min": min(ratios), "ratio_max": max(ratios),
         "heat_weight_sum": scale_sums[64]},
        passed=bool(np.all(np.isfinite(ratios))),
        tolerance="ratios finite within one recorded band",
    )


def config_from_manifest(path) -> RunConfig:
    """Recover the canonical configuration echoed in a manifest."""
    lines = Path(path).read_text().splitlines()
    try:
        start = lines.index("[config]") + 1
        end = lines.index("[outputs]")
    except ValueError as exc:
        raise ConfigError(f"{path}: not a manifest (missing sections)") from exc
    return parse_config("\n".join(lines[start:end]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mns2d",
        description="pseudo-spectral fluid-electromagnetic simulation and its analysis harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"{name} experiment")
        p.add_argument("--config", required=True, help="flat key=value configuration file")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    config = replace(config, experiment=args.command)
    try:
        status, out = orchestrate(config, args.out)
    except S.BlowUpError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 3
    except S.SnapshotWriteError as exc:
        print(f"output failure: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
