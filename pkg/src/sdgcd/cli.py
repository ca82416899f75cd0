"""Command-line experiment runner.

Examples
--------
    sdgcd --experiment dof --N 2,4,8,16,32,64
    sdgcd --experiment 1 --method both --out results/
    sdgcd --experiment 3 --N 32 --theta 0,0.5,1
    sdgcd --config run.cfg --mu 1e-4

Config files hold ``key = value`` lines (``#`` starts a comment); the keys are
the long flag names with dashes or underscores.  Flags override the file.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis
from .forms import DATA_QUAD_DEGREE, MIN_QUAD_DEGREE
from .mesh import build_structured
from .problems import make_problem
from .spaces import MAX_DEGREE, SpaceKind, build_space
from .system import Discretization, NotSPDError, SingularSystemError

logger = logging.getLogger("sdgcd")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

MU_SWEEP = (1.0, 1e-2, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4)
DEFAULTS = {
    "dof": dict(N_list=(2, 4, 8, 16, 32, 64), mu_list=(1.0,)),
    1: dict(N_list=(2, 4, 8, 16, 32, 64), mu_list=(1.0,)),
    2: dict(N_list=(2, 4, 8, 16, 32, 64), mu_list=MU_SWEEP),
    3: dict(N_list=(32,), mu_list=MU_SWEEP),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: int | str
    method: str = "both"
    N_list: tuple[int, ...] = ()
    mu_list: tuple[float, ...] = ()
    theta_list: tuple[float, ...] = (0.5,)
    degree: int = 1
    out: Path = Path("results")
    deterministic: bool = True
    quad_degree: int = DATA_QUAD_DEGREE
    sample: bool = False
    dump_mesh: bool = False
    b: tuple[float, float] = (20.0, 20.0)
    notes: list[str] = field(default_factory=list)

    @property
    def methods(self) -> tuple[str, ...]:
        return ("SDG", "ESDG") if self.method == "both" else (self.method,)

    def validate(self) -> "RunConfig":
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected 1, 2, 3 or dof")
        if self.method not in ("SDG", "ESDG", "both"):
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.N_list or any(n < 1 for n in self.N_list):
            raise ConfigError("N values must be positive integers")
        if self.experiment in (1, 2):
            ok = all(b == 2 * a for a, b in zip(self.N_list, self.N_list[1:]))
            if not ok or any(n & (n - 1) for n in self.N_list):
                raise ConfigError("convergence runs need ascending powers of two, each double the previous")
        if any(m <= 0 or not math.isfinite(m) for m in self.mu_list):
            raise ConfigError("diffusivities must be positive and finite")
        if any(not 0.0 <= t <= 1.0 for t in self.theta_list):
            raise ConfigError("theta values must lie in [0, 1]")
        if self.experiment != 3 and tuple(self.theta_list) != (0.5,):
            msg = "theta only matters for experiment 3; other experiments use theta = 1/2"
            warnings.warn(msg, stacklevel=2)
            self.notes.append(msg)
            self.theta_list = (0.5,)
        if self.degree != MAX_DEGREE:
            raise ConfigError(f"only degree {MAX_DEGREE} is implemented")
        if self.quad_degree < MIN_QUAD_DEGREE:
            raise ConfigError(f"quadrature degree must be at least {MIN_QUAD_DEGREE}")
        return self


# ---------------------------------------------------------------- parsing
def _ints(s):
    return tuple(int(v) for v in str(s).replace(" ", "").split(",") if v)


def _floats(s):
    return tuple(float(v) for v in str(s).replace(" ", "").split(",") if v)


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _experiment(s):
    s = str(s).strip().lower()
    return "dof" if s == "dof" else int(s)


_KEYS = {
    "experiment": ("experiment", _experiment),
    "method": ("method", lambda s: "both" if s.strip().lower() == "both" else s.strip().upper()),
    "n": ("N_list", _ints),
    "mu": ("mu_list", _floats),
    "theta": ("theta_list", _floats),
    "degree": ("degree", int),
    "out": ("out", Path),
    "deterministic": ("deterministic", _bool),
    "quad_degree": ("quad_degree", int),
    "sample": ("sample", _bool),
    "dump_mesh": ("dump_mesh", _bool),
    "b": ("b", _floats),
}


def read_config(path) -> dict:
    """Parse a ``key = value`` file into RunConfig keyword arguments."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        _set(values, key, val, f"{path}:{lineno}")
    return values


def _set(values, key, raw, where):
    norm = key.lower().replace("-", "_")
    if norm == "n_list":
        norm = "n"
    if norm not in _KEYS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    name, conv = _KEYS[norm]
    try:
        values[name] = conv(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    # bad flags are configuration errors (exit 1), not argparse's usual 2
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sdgcd", description="Staggered DG convection-diffusion experiments.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--experiment", help="1, 2, 3 or dof")
    p.add_argument("--method", help="SDG, ESDG or both")
    p.add_argument("--N", dest="n", help="comma-separated refinement levels")
    p.add_argument("--mu", help="comma-separated diffusivities")
    p.add_argument("--theta", help="comma-separated splitting parameters (experiment 3)")
    p.add_argument("--degree", help="polynomial degree (only 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--deterministic", action="store_const", const="true",
                   help="fixed evaluation order (the default; runs are sequential)")
    p.add_argument("--quad-degree", dest="quad_degree", help="data quadrature exactness degree")
    p.add_argument("--b", help="constant field for experiment 1, e.g. 20,20")
    p.add_argument("--sample", action="store_const", const="true", help="write 101x101 field samples")
    p.add_argument("--dump-mesh", dest="dump_mesh", action="store_const", const="true", help="write mesh dumps")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None) -> tuple[RunConfig, bool]:
    args = build_parser().parse_args(argv)
    values = read_config(args.config) if args.config else {}
    for key in _KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            _set(values, key, raw, "command line")
    if "experiment" not in values:
        raise ConfigError("no experiment given")
    exp = values["experiment"]
    if exp in DEFAULTS:
        for k, v in DEFAULTS[exp].items():
            values.setdefault(k, v)
    if exp == 3 and "theta_list" not in values:
        values["theta_list"] = (0.0, 0.5, 1.0)
    return RunConfig(**values).validate(), args.verbose


# ---------------------------------------------------------------- runners
def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info("wrote %s", path)


def _tag(mu):
    return f"{mu:g}"


def run_dof_table(config: RunConfig) -> list[tuple[int, int, int, float]]:
    rows = []
    for N in config.N_list:
        disc_mesh = build_structured(N)
        nu = build_space(disc_mesh, SpaceKind.UH).n_dofs
        nt = build_space(disc_mesh, SpaceKind.UH_TILDE).n_dofs
        rows.append((N, nu, nt, nt / nu))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "dim_Uh", "dim_UhTilde", "ratio"])
    w.writerows([(N, a, b, repr(r)) for N, a, b, r in rows])
    _write(config.out / "dof_table.csv", buf.getvalue())
    md = ["| N | dim U^h | dim Ũ^h | ratio |", "|---:|---:|---:|---:|"]
    md += [f"| {N} | {a} | {b} | {r:.4f} |" for N, a, b, r in rows]
    _write(config.out / "dof_table.md", "\n".join(md) + "\n")
    return rows


def run_convergence(config: RunConfig) -> tuple[list[analysis.ConvergenceTable], bool]:
    """Errors and orders for experiments 1 and 2, one table per (method, mu).

    Returns the tables and whether any solve failed.
    """
    if config.experiment not in (1, 2):
        raise ConfigError("convergence tables are produced for experiments 1 and 2")
    problems = {mu: make_problem(config.experiment, mu, config.b) for mu in config.mu_list}
    tables = {(m, mu): analysis.ConvergenceTable(m, mu) for mu in config.mu_list for m in config.methods}
    aborted = set()
    last = {}
    b = problems[config.mu_list[0]].b
    for N in config.N_list:
        disc = Discretization(N, b, config.quad_degree)
        if config.dump_mesh:
            disc.mesh.dump(config.out / f"mesh_N{N}.txt")
        for mu, prob in problems.items():
            for m in config.methods:
                key = (m, mu)
                if key in aborted:
                    continue
                try:
                    res = disc.solve(m, mu, prob.f, prob.g)
                    eu = analysis.l2_error_potential(res, prob.u_exact)
                    ez = analysis.l2_error_flux(res, prob.grad_u_exact)
                    if not (math.isfinite(eu) and math.isfinite(ez)):
                        raise SingularSystemError("non-finite error")
                except (SingularSystemError, NotSPDError) as exc:
                    logger.error("%s mu=%g N=%d: %s", m, mu, N, exc)
                    tables[key].add_failure(N, f"FAILED: {exc}")
                    aborted.add(key)
                    continue
                tables[key].add(N, eu, ez)
                last[key] = (N, res)
    for (m, mu), table in tables.items():
        stem = f"exp{config.experiment}_{m}_mu{_tag(mu)}"
        _write(config.out / f"{stem}.csv", table.to_csv())
        _write(config.out / f"{stem}.md", table.to_markdown())
        if config.sample and (m, mu) in last:
            N, res = last[(m, mu)]
            path = config.out / f"sample_{stem}_N{N}.txt"
            path.parent.mkdir(parents=True, exist_ok=True)
            analysis.write_samples(analysis.sample_field(res), path)
    return list(tables.values()), bool(aborted)


@dataclass
class StabilityCell:
    norm: float | None
    condition: float | None

    def text(self, full: bool) -> tuple[str, str]:
        if self.norm is None:
            return "SINGULAR", ""
        if full:
            return repr(self.norm), repr(self.condition)
        return f"{self.norm:.3g}", f"{self.condition:.1e}"


def run_stability_sweep(config: RunConfig) -> tuple[dict, bool]:
    """||z_h|| for experiment 3 over (mu, theta) at the first N of the config."""
    if config.experiment != 3:
        raise ConfigError("the stability sweep is experiment 3")
    N = config.N_list[0]
    method = config.methods[-1]  # ESDG when both are requested
    prob0 = make_problem(3, config.mu_list[0])
    disc = Discretization(N, prob0.b, config.quad_degree)
    if config.dump_mesh:
        disc.mesh.dump(config.out / f"mesh_N{N}.txt")
    cells, failed = {}, False
    for mu in config.mu_list:
        prob = make_problem(3, mu)
        for theta in config.theta_list:
            try:
                res = disc.solve(method, mu, prob.f, prob.g, theta)
                norm = analysis.flux_norm(res)
                if not math.isfinite(norm):
                    raise SingularSystemError("non-finite flux")
                cells[(mu, theta)] = StabilityCell(norm, res.condition_estimate)
            except SingularSystemError as exc:
                logger.warning("mu=%g theta=%g: %s", mu, theta, exc)
                cells[(mu, theta)] = StabilityCell(None, None)
                failed = True
            if config.sample and theta == 0.5 and mu == config.mu_list[-1] and cells[(mu, theta)].norm is not None:
                path = config.out / f"sample_exp3_{method}_mu{_tag(mu)}_N{N}.txt"
                path.parent.mkdir(parents=True, exist_ok=True)
                analysis.write_samples(analysis.sample_field(res), path)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["mu"]
    for t in config.theta_list:
        header += [f"znorm_theta{t:g}", f"cond_theta{t:g}"]
    w.writerow(header)
    md = [
        f"{method}, N = {N}: ||z_h|| (condition estimate)",
        "",
        "| mu | " + " | ".join(f"theta = {t:g}" for t in config.theta_list) + " |",
        "|---:|" + "---:|" * len(config.theta_list),
    ]
    for mu in config.mu_list:
        row, mdrow = [repr(mu)], [f"{mu:g}"]
        for t in config.theta_list:
            cell = cells[(mu, t)]
            row += list(cell.text(True))
            n, c = cell.text(False)
            mdrow.append(n if not c else f"{n} ({c})")
        w.writerow(row)
        md.append("| " + " | ".join(mdrow) + " |")
    _write(config.out / f"exp3_{method}_N{N}.csv", buf.getvalue())
    _write(config.out / f"exp3_{method}_N{N}.md", "\n".join(md) + "\n")
    return cells, failed


def run(config: RunConfig) -> int:
    if config.experiment == "dof":
        for N, a, b, r in run_dof_table(config):
            print(f"N={N:3d}  dim Uh={a:6d}  dim UhTilde={b:6d}  ratio={r:.4f}")
        return EXIT_OK
    if config.experiment == 3:
        _, failed = run_stability_sweep(config)
        print((config.out / f"exp3_{config.methods[-1]}_N{config.N_list[0]}.md").read_text())
        return EXIT_SOLVER if failed else EXIT_OK
    tables, failed = run_convergence(config)
    for t in tables:
        print(t.to_markdown())
    return EXIT_SOLVER if failed else EXIT_OK


def main(argv=None) -> int:
    try:
        config, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"sdgcd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"sdgcd: cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    for note in config.notes:
        logger.warning(note)
    try:
        return run(config)
    except ConfigError as exc:
        print(f"sdgcd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
