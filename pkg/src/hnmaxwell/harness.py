"""
Command-line harness: configuration, experiment drivers and result files.

Usage::

    hn <subcommand> --config <file.yaml> [--out <dir>] [--mode direct|fast]

Each run writes ``<subcommand>.csv`` with the data rows and ``manifest.json``
with the echoed configuration, versions and wall-clock metadata.  The exit
code is nonzero when an assertion-grade check fails (for example an energy
increase in a homogeneous run).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .fastconv import ContourAccuracyError, build_level
from .fdtd1d import Grid1D, PhysicalMedium, run_fdtd, source_pulse
from .prabhakar import KernelSpec, kernel_e, weights
from .problems import ManufacturedSolution, decay_initial_data, field_difference, field_errors
from .recovery import analytic_permittivity, analytic_reflection, analytic_transfer, recover, relative_errors
from .spectral2d import SpectralOps, build_space, interpolate_init
from .timestepper import MediumParams, run

__all__ = [
    "EXPERIMENTS",
    "FastConfig",
    "ResultRecord",
    "RunConfig",
    "dump_config",
    "load_config",
    "main",
    "run_experiment",
]

EXPERIMENTS = (
    "time-convergence",
    "space-convergence",
    "energy",
    "timing",
    "fdtd-recover",
    "kernel-eval",
    "weights-dump",
    "fastconv-verify",
)


# {{{ configuration


@dataclass
class FastConfig:
    enabled: bool = True
    base: int = 5
    ncol: int = 30
    eps_f: float = 1e-10

    def stepper_kwargs(self) -> dict[str, Any]:
        return {"base": self.base, "ncol": self.ncol, "eps_f": self.eps_f}


@dataclass
class FDTDConfig:
    a: float = 0.0
    b: float = 1.1
    dz: float = 1.1e-3
    dt: float = 1.768e-12
    T: float = 5.304e-9
    z_star: float = 0.55
    separations: list[int] = field(default_factory=lambda: [20, 30])
    scheme: str = "yee"
    f_min: float = 0.1e9
    f_max: float = 10e9
    n_freq: int = 400
    band_rel: float = 1e-4
    tolerance: float = 0.05


@dataclass
class RunConfig:
    """One experiment.  Keys mirror the symbols of the model."""

    experiment: str
    alpha: float = 0.5
    beta: float = 0.5
    eps_inf: float = 1.0
    eps_s: float = 2.0
    tau0: float = 1.0
    sigma: float = -1.0
    N: int = 50
    Ns: list[int] = field(default_factory=list)
    dt: float = 0.01
    dts: list[float] = field(default_factory=list)
    T: float = 1.0
    Nt: int | None = None
    Nts: list[int] = field(default_factory=list)
    panels: list[list[float]] = field(default_factory=list)
    compare_modes: bool = False
    mu: float | None = None
    gamma: float | None = None
    times: list[float] = field(default_factory=list)
    K: int = 16
    levels: int = 6
    fast: FastConfig = field(default_factory=FastConfig)
    fdtd: FDTDConfig = field(default_factory=FDTDConfig)
    output: str = "results"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if isinstance(self.fast, dict):
            self.fast = FastConfig(**self.fast)
        if isinstance(self.fdtd, dict):
            self.fdtd = FDTDConfig(**self.fdtd)

    @property
    def mode(self) -> str:
        return "fast" if self.fast.enabled else "direct"

    def medium(self, alpha: float | None = None, beta: float | None = None) -> MediumParams:
        return MediumParams(
            self.eps_inf,
            self.eps_s,
            self.alpha if alpha is None else alpha,
            self.beta if beta is None else beta,
        )

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown configuration keys: {sorted(extra)}")
        data = dict(data)
        for key, sub in (("fast", FastConfig), ("fdtd", FDTDConfig)):
            if key in data and isinstance(data[key], dict):
                sub_known = {f.name for f in dataclasses.fields(sub)}
                bad = set(data[key]) - sub_known
                if bad:
                    raise ValueError(f"unknown {key} keys: {sorted(bad)}")
                data[key] = sub(**data[key])
        return cls(**data)


def load_config(path: str | Path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(yaml.safe_load(fh))


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


# }}}


@dataclass
class ResultRecord:
    """Rows of one experiment plus metadata."""

    experiment: str
    config: dict[str, Any]
    rows: list[dict[str, Any]] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)
    extra_tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def write(self, outdir: str | Path) -> list[Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [_write_csv(out / f"{self.experiment}.csv", self.rows)]
        for name, rows in self.extra_tables.items():
            paths.append(_write_csv(out / f"{name}.csv", rows))
        manifest = {
            "experiment": self.experiment,
            "config": self.config,
            "checks": self.checks,
            "meta": self.meta,
            "versions": {
                "hnmaxwell": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
            "files": [p.name for p in paths],
        }
        mpath = out / "manifest.json"
        mpath.write_text(json.dumps(manifest, indent=2, default=_jsonable) + "\n")
        return paths + [mpath]


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not serializable: {type(x)}")


def _write_csv(path: Path, rows: list[dict[str, Any]]) -> Path:
    cols: list[str] = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=cols)
        wr.writeheader()
        for r in rows:
            wr.writerow({c: _fmt(r.get(c, "")) for c in cols})
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def observed_orders(errors: list[float], steps: list[float]) -> list[float | None]:
    """log(err_coarse / err_fine) / log(dt_coarse / dt_fine) between consecutive rows.

    For halved steps this is log2 of the error ratio.  The first row has no
    predecessor and gets None.
    """
    out: list[float | None] = [None]
    for i in range(1, len(errors)):
        a, b = errors[i - 1], errors[i]
        ratio = steps[i - 1] / steps[i]
        out.append(math.log(a / b) / math.log(ratio) if a > 0 and b > 0 and ratio != 1 else None)
    return out


# {{{ drivers


def _manufactured_run(cfg: RunConfig, N: int, dt: float, mode: str, space=None, ops=None):
    med = cfg.medium()
    space = space or build_space(N)
    ops = ops or SpectralOps(space)
    nt = int(round(cfg.T / dt))
    if abs(nt * dt - cfg.T) > 1e-9 * cfg.T:
        raise ValueError(f"dt={dt} does not divide T={cfg.T}")
    ms = ManufacturedSolution(med)
    res = run(
        ops,
        med,
        dt,
        nt,
        np.zeros(space.n_e),
        np.zeros(space.n_h),
        mode=mode,
        sources=ms.sources(space, dt, nt),
        stepper_kwargs=cfg.fast.stepper_kwargs() if mode == "fast" else None,
    )
    return space, ops, ms, res


def run_time_convergence(cfg: RunConfig) -> ResultRecord:
    """Errors and observed orders of the manufactured solution over a Δt sweep."""
    rec = ResultRecord("time-convergence", cfg.to_dict())
    space = build_space(cfg.N)
    ops = SpectralOps(space)
    errs = {"E": [], "H": [], "P": []}
    rows = []
    for dt in cfg.dts:
        _, _, ms, res = _manufactured_run(cfg, cfg.N, dt, cfg.mode, space, ops)
        e = field_errors(space, res.final, ms)
        row = {"dt": dt, "Nt": res.final.k}
        for key in "EHP":
            errs[key].append(e[key])
        if cfg.compare_modes:
            other = "direct" if cfg.mode == "fast" else "fast"
            _, _, _, res2 = _manufactured_run(cfg, cfg.N, dt, other, space, ops)
            diff = field_difference(space, res.final, res2.final)
            for key in "EHP":
                row[f"Err{key}_DF"] = diff[key]
        row["reference_slope"] = 0.5 * dt
        rows.append(row)
    for key in "EHP":
        orders = observed_orders(errs[key], list(cfg.dts))
        for row, err, order in zip(rows, errs[key], orders):
            row[f"Err{key}"] = err
            row[f"Order{key}"] = "" if order is None else order
    cols = ["dt", "Nt", "ErrE", "OrderE", "ErrH", "OrderH", "ErrP", "OrderP"]
    rec.rows = [{c: r[c] for c in cols} | {k: v for k, v in r.items() if k not in cols} for r in rows]
    return rec


def run_space_convergence(cfg: RunConfig) -> ResultRecord:
    """Errors of the manufactured solution over a sweep of N at fixed Δt."""
    rec = ResultRecord("space-convergence", cfg.to_dict())
    for N in cfg.Ns:
        space, _, ms, res = _manufactured_run(cfg, N, cfg.dt, cfg.mode)
        e = field_errors(space, res.final, ms)
        rec.rows.append({"N": N, "ErrE": e["E"], "ErrH": e["H"], "ErrP": e["P"]})
    return rec


def run_energy(cfg: RunConfig) -> ResultRecord:
    """Modified and plain energy traces of the homogeneous decay experiment."""
    rec = ResultRecord("energy", cfg.to_dict())
    panels = cfg.panels or [[cfg.alpha, cfg.beta]]
    space = build_space(cfg.N)
    ops = SpectralOps(space)
    init = interpolate_init(space, decay_initial_data, lambda X, Y: 0 * X)
    nt = cfg.Nt if cfg.Nt is not None else int(round(cfg.T / cfg.dt))
    for alpha, beta in panels:
        med = cfg.medium(alpha, beta)
        res = run(
            ops,
            med,
            cfg.dt,
            nt,
            init.E,
            init.H,
            mode=cfg.mode,
            stepper_kwargs=cfg.fast.stepper_kwargs() if cfg.mode == "fast" else None,
        )
        tr = res.trace
        e0 = tr.energy[0]
        incr = np.diff(tr.energy)
        worst = float(incr.max()) if incr.size else 0.0
        tag = f"alpha={alpha},beta={beta}"
        rec.checks[f"monotone[{tag}]"] = bool(worst <= 1e-12 * e0)
        rec.checks[f"polarization_bound[{tag}]"] = res.polarization_bound_holds()
        rec.meta[f"max_increment[{tag}]"] = worst / e0 if e0 else 0.0
        for k, en, pl in zip(tr.k, tr.energy, tr.plain):
            rec.rows.append({"alpha": alpha, "beta": beta, "k": k, "t": k * cfg.dt, "energy": en, "plain_energy": pl})
    return rec


def run_timing(cfg: RunConfig) -> ResultRecord:
    """Wall time and operation counts of direct and fast history evaluation."""
    rec = ResultRecord("timing", cfg.to_dict())
    med = cfg.medium()
    space = build_space(cfg.N)
    ops = SpectralOps(space)
    rng = np.random.default_rng(cfg.seed)
    init = interpolate_init(space, decay_initial_data, lambda X, Y: 0 * X)
    E0 = init.E * (1 + 0.01 * rng.standard_normal(init.E.shape))
    prev: dict[str, float] = {}
    for nt in cfg.Nts:
        dt = cfg.T / nt
        row: dict[str, Any] = {"Nt": nt, "dt": dt}
        for mode in ("direct", "fast"):
            t0 = time.perf_counter()
            res = run(
                ops, med, dt, nt, E0, init.H, mode=mode,
                stepper_kwargs=cfg.fast.stepper_kwargs() if mode == "fast" else None,
            )
            row[f"{mode}_seconds"] = time.perf_counter() - t0
            row[f"{mode}_ops"] = res.stepper.history.ops
            if mode in prev:
                row[f"{mode}_ops_ratio"] = res.stepper.history.ops / prev[mode]
            prev[mode] = res.stepper.history.ops
        row["fast_over_direct_seconds"] = row["fast_seconds"] / row["direct_seconds"]
        rec.rows.append(row)
    return rec


def _fdtd_pair(cfg: RunConfig, alpha: float, beta: float, mode: str):
    fc = cfg.fdtd
    base = Grid1D(fc.a, fc.b, fc.dz, fc.dt, fc.z_star)
    ms = base.m_star
    grid = Grid1D(fc.a, fc.b, fc.dz, fc.dt, fc.z_star, tuple([ms] + [ms + l for l in fc.separations]))
    med = PhysicalMedium(cfg.eps_s, cfg.eps_inf, cfg.tau0, alpha, beta)
    nt = int(round(fc.T / fc.dt))
    res = run_fdtd(
        grid, med, nt, mode=mode, scheme=fc.scheme,
        fast_options=cfg.fast.stepper_kwargs() if mode == "fast" else None,
    )
    return grid, med, res


def run_fdtd_recover(cfg: RunConfig) -> ResultRecord:
    """FDTD run followed by recovery of ε_r, T and |R| at each probe separation."""
    rec = ResultRecord("fdtd-recover", cfg.to_dict())
    fc = cfg.fdtd
    panels = cfg.panels or [[cfg.alpha, cfg.beta]]
    om = 2 * np.pi * np.linspace(fc.f_min, fc.f_max, fc.n_freq)
    for alpha, beta in panels:
        grid, med, res = _fdtd_pair(cfg, alpha, beta, cfg.mode)
        ms = grid.m_star
        inc = source_pulse(res.t)
        eps = analytic_permittivity(med, om)
        R = analytic_reflection(eps)
        for l in fc.separations:
            d = l * grid.dz
            resp = recover(res.probes[ms], res.probes[ms + l], grid.dt, d, om, band_rel=fc.band_rel, reference=inc)
            T = analytic_transfer(eps, om, d)
            errs = relative_errors(resp, med)
            band = resp.trusted
            tag = f"alpha={alpha},beta={beta},l={l}"
            for key, v in errs.items():
                worst = float(np.max(v[band]))
                rec.meta[f"max_rel_error[{tag}][{key}]"] = worst
                rec.checks[f"{key}[{tag}]"] = worst <= fc.tolerance
            table = []
            for j in range(om.size):
                table.append(
                    {
                        "omega_Hz": om[j] / (2 * np.pi),
                        "re_T_approx": resp.T_approx[j].real,
                        "im_T_approx": resp.T_approx[j].imag,
                        "re_T": T[j].real,
                        "im_T": T[j].imag,
                        "eps1_approx": resp.eps_prime[j],
                        "eps2_approx": resp.eps_second[j],
                        "eps1": eps[j].real,
                        "eps2": -eps[j].imag,
                        "refl_approx": resp.refl_approx[j],
                        "refl": R[j],
                        "trusted": int(band[j]),
                    }
                )
            rec.extra_tables[f"spectrum_a{alpha}_b{beta}_l{l}"] = table
            rec.rows.append(
                {"alpha": alpha, "beta": beta, "l": l, "d_m": d}
                | {f"max_{k}": float(np.max(v[band])) for k, v in errs.items()}
                | {"band_lo_Hz": float(om[band].min() / (2 * np.pi)), "band_hi_Hz": float(om[band].max() / (2 * np.pi))}
            )
    return rec


def run_kernel_eval(cfg: RunConfig) -> ResultRecord:
    rec = ResultRecord("kernel-eval", cfg.to_dict())
    spec = KernelSpec(cfg.alpha, cfg.beta, cfg.sigma)
    mu = cfg.alpha * cfg.beta if cfg.mu is None else cfg.mu
    gamma = cfg.beta if cfg.gamma is None else cfg.gamma
    for t in cfg.times:
        rec.rows.append({"t": t, "value": float(kernel_e(spec, mu, gamma, t))})
    return rec


def run_weights_dump(cfg: RunConfig) -> ResultRecord:
    rec = ResultRecord("weights-dump", cfg.to_dict())
    tab = weights(KernelSpec(cfg.alpha, cfg.beta, cfg.sigma), cfg.dt, cfg.K)
    rec.rows = [{"j": j, "w_j": float(w)} for j, w in enumerate(tab.w)]
    return rec


def run_fastconv_verify(cfg: RunConfig) -> ResultRecord:
    rec = ResultRecord("fastconv-verify", cfg.to_dict())
    f = cfg.fast
    varrho = -cfg.sigma
    for lev in range(1, cfg.levels + 1):
        try:
            cl = build_level(cfg.alpha, cfg.beta, varrho, cfg.dt, lev, f.base, f.ncol, f.eps_f)
            err, ok, (t0, t1) = cl.max_error, True, cl.interval
        except ContourAccuracyError as exc:
            err, ok = exc.achieved, False
            t0, t1 = f.base ** (lev - 1) * cfg.dt, (2 * f.base**lev - 1) * cfg.dt
        rec.rows.append({"level": lev, "t_start": t0, "t_end": t1, "max_error": err, "passed": int(ok)})
        rec.checks[f"level{lev}"] = ok
    return rec


_DRIVERS = {
    "time-convergence": run_time_convergence,
    "space-convergence": run_space_convergence,
    "energy": run_energy,
    "timing": run_timing,
    "fdtd-recover": run_fdtd_recover,
    "kernel-eval": run_kernel_eval,
    "weights-dump": run_weights_dump,
    "fastconv-verify": run_fastconv_verify,
}


def run_experiment(cfg: RunConfig) -> ResultRecord:
    t0 = time.perf_counter()
    rec = _DRIVERS[cfg.experiment](cfg)
    rec.meta["wall_seconds"] = time.perf_counter() - t0
    return rec


# }}}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hn", description="Havriliak-Negami Maxwell solver experiments")
    parser.add_argument("subcommand", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="YAML configuration file")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--mode", choices=("direct", "fast"), help="history evaluation mode")
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    if cfg.experiment != args.subcommand:
        parser.error(f"config is for {cfg.experiment!r}, not {args.subcommand!r}")
    if args.mode is not None:
        cfg.fast.enabled = args.mode == "fast"
    rec = run_experiment(cfg)
    paths = rec.write(args.out or cfg.output)
    for p in paths:
        print(p)
    failed = [k for k, v in rec.checks.items() if not v]
    for k in failed:
        print(f"check failed: {k}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
