"""Command-line front end: scans, sweeps and threshold searches written as CSV or JSON."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .core import FieldPair, ModelParams, RadialGrid, density_at_origin
from .delta1d import deformation_energy, psi_at_impurity
from .fitting import r_fit
from .gradflow import FlowConfig, Outcome, SolveReport, ground_state, lowest_state
from .variational import critical_zeta, find_selftrap, tf_sech

MODES = ("variational-scan", "tf", "delta1d", "groundstate", "sweep", "thresholds")
FORMATS = ("csv", "json")
DEFAULT_GRIDS = {1: (256.0, 8192), 2: (64.0, 4096), 3: (32.0, 4096)}
DEFAULT_ZETA = {1: (0.05, 10.0, 50), 2: (1.0, 20.0, 50), 3: (20.0, 60.0, 50)}
PARAM_COLUMNS = ("alpha", "beta", "gamma", "dim", "radius", "points", "tau")
SOLVE_COLUMNS = ("outcome", "sigma", "lam", "r_fit", "n0", "epsilon", "e_tot", "steps")


class ConfigError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


def parse_range(text: str, with_count: bool = True) -> tuple:
    parts = text.split(":")
    try:
        if with_count:
            if len(parts) != 3:
                raise ValueError
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1 or (n == 1 and a != b):
                raise ConfigError(f"range {text!r} is empty")
            return a, b, n
        if len(parts) != 2:
            raise ValueError
        return float(parts[0]), float(parts[1])
    except ValueError:
        form = "start:end:count" if with_count else "low:high"
        raise ConfigError(f"range {text!r} must look like {form}") from None


def range_values(rng: tuple[float, float, int]) -> list[float]:
    a, b, n = rng
    return [a] if n == 1 else [float(v) for v in np.linspace(a, b, n)]


@dataclass
class RunConfig:
    mode: str
    dim: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.5
    beta_range: tuple | None = None
    zeta_range: tuple | None = None
    crit_range: tuple | None = None
    star_range: tuple | None = None
    resolution: float = 0.05
    radius: float | None = None
    points: int | None = None
    tau: float = FlowConfig.time_step
    tol: float = FlowConfig.energy_tol
    max_steps: int = FlowConfig.max_steps
    seed_width: float = 1.0
    wall: str = FlowConfig.condensate_wall
    out: str | None = None
    format: str = "csv"
    jobs: int = 1
    trace: str | None = None
    trace_every: int = 100
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        if self.dim not in DEFAULT_GRIDS:
            raise ConfigError("dim must be 1, 2 or 3")
        r_def, n_def = DEFAULT_GRIDS[self.dim]
        self.radius = r_def if self.radius is None else float(self.radius)
        self.points = n_def if self.points is None else int(self.points)
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if not self.resolution > 0:
            raise ConfigError("resolution must be positive")
        if self.mode == "delta1d" and self.dim != 1:
            raise ConfigError("delta1d mode needs dim = 1")
        try:
            self.model(self.beta)
            self.grid()
            self.flow()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def model(self, beta: float) -> ModelParams:
        return ModelParams(self.alpha, beta, self.gamma, self.dim)

    def grid(self) -> RadialGrid:
        return RadialGrid(self.dim, self.radius, self.points)

    def flow(self) -> FlowConfig:
        return FlowConfig(time_step=self.tau, energy_tol=self.tol, max_steps=self.max_steps,
                          condensate_wall=self.wall)

    def betas(self) -> list[float]:
        if self.beta_range is None:
            if self.mode == "delta1d":
                return range_values((-6.0, 6.0, 121))
            return [self.beta]
        return range_values(self.beta_range)

    def params(self, beta: float) -> dict:
        return {"alpha": self.alpha, "beta": beta, "gamma": self.gamma, "dim": self.dim,
                "radius": self.radius, "points": self.points, "tau": self.tau}

    def echo(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("extra", "out", "trace")}
        for k in ("beta_range", "zeta_range", "crit_range", "star_range"):
            if out[k] is not None:
                out[k] = list(out[k])
        return out


# row builders ------------------------------------------------------------------


def solve_row(cfg: RunConfig, beta: float, rep: SolveReport) -> dict:
    fit = r_fit(cfg.grid(), rep.fields.chi)
    return {**cfg.params(beta), "outcome": rep.outcome.value, "sigma": fit.sigma,
            "lam": fit.lam, "r_fit": fit.r_fit, "n0": density_at_origin(rep.fields),
            "epsilon": rep.energy.epsilon, "e_tot": rep.energy.e_tot, "steps": rep.steps}


def _cold_point(args) -> dict:
    cfg, beta = args
    rep = ground_state(cfg.model(beta), cfg.grid(), cfg.flow(), seed_width=cfg.seed_width)
    return solve_row(cfg, beta, rep)


def sweep_rows(cfg: RunConfig) -> list[dict]:
    """One solve per beta.

    A single job continues along beta, seeding each point with the previous
    converged state.  Several jobs solve each point from the fresh seed in a
    process pool; rows always come back in beta order.
    """
    betas = cfg.betas()
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_cold_point, [(cfg, b) for b in betas]))
    grid, flow = cfg.grid(), cfg.flow()
    rows, previous = [], None
    for beta in betas:
        rep = ground_state(cfg.model(beta), grid, flow, initial=previous, seed_width=cfg.seed_width)
        previous = rep.fields if rep.converged else None
        rows.append(solve_row(cfg, beta, rep))
    return rows


def groundstate_rows(cfg: RunConfig) -> list[dict]:
    grid = cfg.grid()
    every = cfg.trace_every if cfg.trace else 0
    rep = ground_state(cfg.model(cfg.beta), grid, cfg.flow(), seed_width=cfg.seed_width,
                       trace_every=every)
    if cfg.trace:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "e_tot", "residual_psi", "residual_chi"])
        for step, e, r_psi, r_chi in rep.trace:
            w.writerow([step, _fmt(e), _fmt(r_psi), _fmt(r_chi)])
        _write_text(cfg.trace, buf.getvalue())
    return [solve_row(cfg, cfg.beta, rep)]


def variational_rows(cfg: RunConfig) -> list[dict]:
    zetas = range_values(cfg.zeta_range or DEFAULT_ZETA[cfg.dim])
    rows = []
    for z in zetas:
        if not z > 0:
            raise ConfigError("zeta values must be positive")
        m = ModelParams(1.0, math.sqrt(z), 1.0, cfg.dim)
        res = find_selftrap(m)
        rows.append({"dim": cfg.dim, "zeta": z,
                     "sigma_min": res.sigma_min if res.localized else math.nan,
                     "f": res.f_value if res.localized else math.nan,
                     "stable": res.stable})
    return rows


def tf_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for beta in cfg.betas():
        sol = tf_sech(cfg.model(beta))
        rows.append({**cfg.params(beta), "zeta": sol.zeta, "lam": sol.lam,
                     "epsilon_prime": sol.epsilon_prime})
    return rows


def delta1d_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for beta in cfg.betas():
        rows.append({**cfg.params(beta), "psi0": psi_at_impurity(beta, cfg.gamma),
                     "e_def": deformation_energy(beta, cfg.gamma),
                     "e_weak": -0.5 * beta**2 * cfg.gamma})
    return rows


# thresholds ---------------------------------------------------------------------


def is_localized(cfg: RunConfig, beta: float) -> bool:
    """Lowest converged state has fitted Gaussian width below R/4."""
    grid = cfg.grid()
    rep = lowest_state(cfg.model(beta), grid, cfg.flow(), seed_width=cfg.seed_width)
    if rep.outcome is Outcome.MAX_STEPS_EXCEEDED:
        raise SolverError(f"no convergence at beta = {beta!r}")
    if not rep.converged:
        return True
    return r_fit(grid, rep.fields.chi).sigma < grid.radius / 4


def is_collapsed(cfg: RunConfig, beta: float) -> bool:
    rep = ground_state(cfg.model(beta), cfg.grid(), cfg.flow(), seed_width=cfg.seed_width)
    if rep.outcome is Outcome.MAX_STEPS_EXCEEDED:
        raise SolverError(f"no convergence at beta = {beta!r}")
    return rep.outcome in (Outcome.COLLAPSE_DETECTED, Outcome.NO_GROUND_STATE)


def bisect_onset(predicate, off: float, on: float, resolution: float) -> tuple[float, float]:
    """Shrink [off, on] with predicate(off) false and predicate(on) true to the resolution.

    ``off`` may lie on either side of ``on``.  Returns the final bracket.
    """
    if predicate(off) or not predicate(on):
        raise SolverError(f"bracket ({off!r}, {on!r}) does not contain a single onset")
    while abs(on - off) > resolution:
        mid = 0.5 * (off + on)
        if predicate(mid):
            on = mid
        else:
            off = mid
    return off, on


def variational_beta_crit(cfg: RunConfig) -> float:
    return math.sqrt(critical_zeta(cfg.dim) * cfg.alpha / cfg.gamma**cfg.dim)


def threshold_rows(cfg: RunConfig) -> list[dict]:
    base = {**cfg.params(math.nan), "resolution": cfg.resolution}
    rows = []
    b_var = variational_beta_crit(cfg)
    rows.append({**base, "quantity": "beta_crit_variational", "value": b_var,
                 "low": b_var, "high": b_var})
    if cfg.dim > 1:
        lo, hi = cfg.crit_range or (0.5 * b_var, 1.5 * b_var)
        off, on = bisect_onset(lambda b: is_localized(cfg, b), lo, hi, cfg.resolution)
        rows.append({**base, "quantity": "beta_crit", "value": 0.5 * (off + on),
                     "low": off, "high": on})
    if cfg.dim == 2:
        lo, hi = cfg.star_range or (-1.0 * b_var, -3.0 * b_var)
        off, on = bisect_onset(lambda b: is_collapsed(cfg, b), lo, hi, cfg.resolution)
        rows.append({**base, "quantity": "beta_star", "value": 0.5 * (off + on),
                     "low": min(off, on), "high": max(off, on)})
    return rows


RUNNERS = {
    "variational-scan": variational_rows,
    "tf": tf_rows,
    "delta1d": delta1d_rows,
    "groundstate": groundstate_rows,
    "sweep": sweep_rows,
    "thresholds": threshold_rows,
}


# output ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for row in rows:
        w.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def to_json(cfg: RunConfig, rows: list[dict]) -> str:
    doc = {"config": {k: _json_value(v) for k, v in cfg.echo().items()},
           "rows": [{k: _json_value(v) for k, v in row.items()} for row in rows]}
    validate_document(doc)
    return json.dumps(doc, indent=2) + "\n"


def output_schema() -> dict:
    return json.loads(resources.files("selftrap").joinpath("output.schema.json").read_text())


def validate_document(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, output_schema())


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run(cfg: RunConfig) -> int:
    rows = RUNNERS[cfg.mode](cfg)
    text = to_csv(rows) if cfg.format == "csv" else to_json(cfg, rows)
    _write_text(cfg.out, text)
    failed = [r["beta"] for r in rows if r.get("outcome") == Outcome.MAX_STEPS_EXCEEDED.value]
    if failed:
        raise SolverError(f"no convergence for beta in {failed}")
    return 0


# argument parsing -------------------------------------------------------------------


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{num}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selftrap", description=__doc__)
    p.add_argument("--config", help="file of key = value defaults")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--dim", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta-range", help="start:end:count")
    p.add_argument("--zeta-range", help="start:end:count (variational-scan)")
    p.add_argument("--crit-range", help="low:high bracket for beta_crit")
    p.add_argument("--star-range", help="low:high bracket for beta_star")
    p.add_argument("--resolution", type=float, help="bisection resolution in beta")
    p.add_argument("--radius", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--tau", type=float, help="flow time step")
    p.add_argument("--tol", type=float, help="relative energy tolerance per step")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--seed-width", type=float)
    p.add_argument("--wall", choices=("neumann", "dirichlet"), help="condensate wall condition")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--jobs", type=int)
    p.add_argument("--trace", help="write the convergence trace here (groundstate)")
    p.add_argument("--trace-every", type=int)
    return p


_CASTS = {"dim": int, "points": int, "jobs": int, "max_steps": int, "trace_every": int,
          "alpha": float, "beta": float, "gamma": float, "radius": float, "tau": float,
          "tol": float, "resolution": float, "seed_width": float}
_RANGES = {"beta_range": True, "zeta_range": True, "crit_range": False, "star_range": False}


def config_from_args(argv=None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    args = vars(build_parser().parse_args(argv))
    path = args.pop("config")
    values = read_config_file(path) if path else {}
    for key, value in args.items():
        if value is not None:
            values[key] = value
    if "jobs" not in values and environ.get("SELFTRAP_JOBS"):
        values["jobs"] = environ["SELFTRAP_JOBS"]
    if "mode" not in values:
        raise ConfigError("mode is required")
    known = set(RunConfig.__dataclass_fields__) - {"extra"}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown settings: {sorted(unknown)}")
    kw = {}
    for key, value in values.items():
        try:
            if key in _RANGES:
                kw[key] = parse_range(value, _RANGES[key]) if isinstance(value, str) else value
            elif key in _CASTS:
                kw[key] = _CASTS[key](value)
            else:
                kw[key] = value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return RunConfig(**kw)


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        return _error("config", str(exc), 2)
    except OSError as exc:
        return _error("config", str(exc), 2)
    try:
        return run(cfg)
    except ConfigError as exc:
        return _error("config", str(exc), 2)
    except SolverError as exc:
        return _error("solver", str(exc), 3)
    except OSError as exc:
        return _error("output", str(exc), 4)


if __name__ == "__main__":
    sys.exit(main())
