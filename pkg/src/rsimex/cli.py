"""Command-line interface and INI run configuration.

Subcommands: ``run``, ``convergence``, ``riemann-compare`` and
``vortex-profile``.  The output directory may be overridden with the
``RSIMEX_OUTPUT_DIR`` environment variable.
"""
import argparse
import configparser
import io as _io
import math
import os
import sys
import time
from dataclasses import dataclass, field

from . import exact_vortex as ev
from .cases import CASES, build_case, kh_eps_for_mach, with_physics
from .core_state import conservation_sums
from .diagnostics import ERROR_VARS, coarsen, eoc, l1_error, relative_drift
from .errors import AccuracyError, AdmissibilityError, ConfigError, ConsistencyError, DomainError, SolverError
from .imex_driver import RunConfig, run
from .implicit_stage import SolverOptions
from .io import write_field_csv, write_reports_csv, write_vtk
from .reference_solver import run_reference

OUTPUT_ENV = "RSIMEX_OUTPUT_DIR"

_CASE_PARAMS = {
    "rp1": {"x_jump": float},
    "rp2": {"x_jump": float},
    "bubble": {"C": float, "alpha_L": float, "alpha_R": float, "theta": float, "r0": float},
    "kh": {"eps": float, "mach": float, "T0": float},
    "well-prepared": {"M": float, "alpha_profile": str, "alpha0": float},
    "vortex-compressible": {"c_alpha": float, "alpha_c": float, "nu_alpha": float},
    "vortex-weakly-compressible": {"c_alpha": float, "alpha_c": float, "nu_alpha": float},
}

_SCHEMA = {
    "case": {"name": str},
    "grid": {"n": int, "dims": int},
    "time": {"t_final": float, "cfl_nu": float, "order": int, "dt_max": float, "max_steps": int},
    "solver": {"method": str, "rtol": float, "atol": float, "max_iter": int, "restart": int,
               "kinetic": str, "mu_state": str},
    "output": {"dir": str, "cadence": int, "times": str, "formats": str, "reports": bool},
    "physics": {"gamma1": float, "gamma2": float, "cv1": float, "cv2": float, "tau_alpha": float,
                "tau_w": float, "mach_ratio_C": float, "mach_scaling": float},
}

_FORMATS = ("csv", "vtk")


@dataclass
class Settings:
    """Parsed run configuration; ``None`` means "use the case default"."""

    case: str = "rp1"
    case_params: dict = field(default_factory=dict)
    n: int = 100
    dims: int = None
    t_final: float = None
    cfl_nu: float = 0.25
    order: int = 2
    dt_max: float = math.inf
    max_steps: int = 10_000_000
    solver: dict = field(default_factory=dict)
    out_dir: str = "output"
    cadence: int = 0
    times: tuple = ()
    formats: tuple = ("csv",)
    reports: bool = True
    physics: dict = field(default_factory=dict)

    def validate(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; choose from {sorted(CASES)}")
        allowed = _CASE_PARAMS[self.case]
        for k in self.case_params:
            if k not in allowed:
                raise ConfigError(f"unknown parameter {k!r} for case {self.case!r}")
        if self.n < 4:
            raise ConfigError(f"n must be at least 4, got {self.n}")
        if not 0.0 < self.cfl_nu <= 1.0:
            raise ConfigError(f"cfl_nu must lie in (0, 1], got {self.cfl_nu}")
        if self.order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {self.order}")
        if self.t_final is not None and self.t_final < 0.0:
            raise ConfigError("t_final must be nonnegative")
        if self.cadence < 0:
            raise ConfigError("cadence must be nonnegative")
        for fm in self.formats:
            if fm not in _FORMATS:
                raise ConfigError(f"unknown output format {fm!r}; choose from {_FORMATS}")
        for k, v in self.physics.items():
            if k in ("gamma1", "gamma2") and not v > 1.0:
                raise ConfigError(f"{k} must exceed 1, got {v}")
            if k != "gamma1" and k != "gamma2" and not v > 0.0:
                raise ConfigError(f"{k} must be positive, got {v}")
        try:
            SolverOptions(**self.solver)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        if self.solver.get("method", "gmres") not in ("gmres", "direct"):
            raise ConfigError(f"unknown linear solver {self.solver['method']!r}")
        if self.solver.get("kinetic", "old") not in ("old", "star"):
            raise ConfigError(f"unknown kinetic-energy convention {self.solver['kinetic']!r}")
        if self.solver.get("mu_state", "hat") not in ("hat", "coef"):
            raise ConfigError(f"unknown chemical-potential state {self.solver['mu_state']!r}")
        return self

    def build_spec(self):
        params = dict(self.case_params)
        if self.case == "kh" and "mach" in params:
            if "eps" in params:
                raise ConfigError("give either eps or mach for the kh case, not both")
            params["eps"] = kh_eps_for_mach(params.pop("mach"))
        spec = build_case(self.case, self.n, **params)
        if self.dims is not None and self.dims != spec.grid.dims:
            raise ConfigError(f"case {self.case!r} is {spec.grid.dims}D, config asks for {self.dims}D")
        if self.physics:
            spec = with_physics(spec, **self.physics)
        return spec

    def run_config(self):
        return RunConfig(case=self.case, n=self.n, cfl_nu=self.cfl_nu, t_final=self.t_final,
                         order=self.order, output_every=self.cadence, output_times=tuple(self.times),
                         dt_max=self.dt_max, max_steps=self.max_steps,
                         solver=SolverOptions(**self.solver))


def _convert(section, key, text, typ):
    text = text.strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is float:
            return float(text)
        if typ is int:
            return int(text)
        return text
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {text!r} as {typ.__name__}") from None


def parse_config(text):
    """Parse INI text into validated :class:`Settings`; unknown keys are rejected."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    s = Settings()
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
    if cp.has_section("case"):
        sec = cp["case"]
        if "name" in sec:
            s.case = sec["name"].strip()
        if s.case not in CASES:
            raise ConfigError(f"unknown case {s.case!r}; choose from {sorted(CASES)}")
        allowed = _CASE_PARAMS[s.case]
        for key, val in sec.items():
            if key == "name":
                continue
            if key not in allowed:
                raise ConfigError(f"[case] unknown key {key!r} for case {s.case!r}")
            s.case_params[key] = _convert("case", key, val, allowed[key])
    for name in ("grid", "time", "solver", "output", "physics"):
        if not cp.has_section(name):
            continue
        for key, val in cp[name].items():
            if key not in _SCHEMA[name]:
                raise ConfigError(f"[{name}] unknown key {key!r}")
            v = _convert(name, key, val, _SCHEMA[name][key])
            if name == "grid":
                setattr(s, key, v)
            elif name == "time":
                setattr(s, key, v)
            elif name == "solver":
                s.solver[key] = v
            elif name == "physics":
                s.physics[key] = v
            elif key == "dir":
                s.out_dir = v
            elif key == "times":
                s.times = tuple(float(t) for t in v.replace(",", " ").split())
            elif key == "formats":
                s.formats = tuple(t.strip() for t in v.replace(",", " ").split())
            else:
                setattr(s, key, v)
    return s.validate()


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None


def _num(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def serialize_config(s):
    """INI text for ``s``; ``parse_config(serialize_config(s))`` reproduces ``s``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["case"] = {"name": s.case, **{k: _num(v) for k, v in sorted(s.case_params.items())}}
    grid = {"n": str(s.n)}
    if s.dims is not None:
        grid["dims"] = str(s.dims)
    cp["grid"] = grid
    tm = {"cfl_nu": _num(s.cfl_nu), "order": str(s.order), "max_steps": str(s.max_steps)}
    if s.t_final is not None:
        tm["t_final"] = _num(s.t_final)
    if not math.isinf(s.dt_max):
        tm["dt_max"] = _num(s.dt_max)
    cp["time"] = tm
    cp["solver"] = {k: _num(v) for k, v in sorted(s.solver.items())}
    cp["output"] = {
        "dir": s.out_dir, "cadence": str(s.cadence),
        "times": " ".join(repr(float(t)) for t in s.times),
        "formats": " ".join(s.formats), "reports": "true" if s.reports else "false",
    }
    cp["physics"] = {k: _num(v) for k, v in sorted(s.physics.items())}
    buf = _io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def output_dir(default):
    return os.environ.get(OUTPUT_ENV) or default


def _write_snapshot(f, eos, out, stem, formats):
    paths = []
    if "csv" in formats:
        paths.append(write_field_csv(f, eos, os.path.join(out, stem + ".csv")))
    if "vtk" in formats:
        paths.append(write_vtk(f, eos, os.path.join(out, stem + ".vtk")))
    return paths


def execute_run(s, out_dir=None, log=print):
    """Run one configuration and write its outputs; returns the RunResult."""
    spec = s.build_spec()
    out = out_dir or output_dir(s.out_dir)
    t0 = time.perf_counter()
    res = run(s.run_config(), spec=spec)
    wall = time.perf_counter() - t0
    for k, (t, f) in enumerate(res.snapshots):
        _write_snapshot(f, spec.eos, out, f"{spec.name}_n{s.n}_{k:04d}", s.formats)
    if s.reports:
        write_reports_csv(res.reports, os.path.join(out, f"{spec.name}_n{s.n}_reports.csv"))
    drift = relative_drift(res.reports[0].totals, conservation_sums(res.field), scale=1.0)
    log(f"case {spec.name}: n={s.n} order={s.order} steps={res.steps} t={res.t:.6g}")
    log("conservation drift (m1, m2, momx, momy, rhoE): " + " ".join(f"{d:.3e}" for d in drift))
    log(f"wall time {wall:.2f} s, linear iterations {res.linear_iterations}")
    return res


def convergence_table(case, resolutions, order=2, nu=0.25, variables=ERROR_VARS, solver=None,
                      t_final=None, case_params=None):
    """Errors against the exact sampler for each resolution, plus EOC."""
    errors = []
    for n in resolutions:
        spec = build_case(case, n, **(case_params or {}))
        if spec.exact is None:
            raise ConfigError(f"case {case!r} has no exact solution for a convergence study")
        cfg = RunConfig(case=case, n=n, cfl_nu=nu, t_final=t_final, order=order,
                        solver=solver or SolverOptions())
        res = run(cfg, spec=spec)
        errors.append(l1_error(res.field, spec.exact, spec.eos, res.t, variables))
    orders = {v: (eoc([e[v] for e in errors]) if len(errors) > 1 else []) for v in variables}
    return errors, orders


def format_table(resolutions, errors, orders, variables=ERROR_VARS):
    """CSV text: one row per variable, error and EOC columns interleaved."""
    head = ["variable"]
    for k, n in enumerate(resolutions):
        head.append(f"err_{n}")
        if k > 0:
            head.append(f"eoc_{n}")
    lines = [",".join(head)]
    for v in variables:
        row = [v]
        for k, e in enumerate(errors):
            row.append(f"{e[v]:.6e}")
            if k > 0:
                row.append(f"{orders[v][k - 1]:.4f}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def riemann_compare(case, n, order, nu, ref_n, ref_nu=0.2, out=None, log=print):
    """RS-IMEX run and reference run on a finer grid; returns L1 distances."""
    if ref_n % n:
        raise ConfigError(f"reference resolution {ref_n} must be a multiple of {n}")
    spec = build_case(case, n)
    res = run(RunConfig(case=case, n=n, cfl_nu=nu, order=order), spec=spec)
    ref_spec = build_case(case, ref_n)
    fr, _, _ = run_reference(ref_spec, nu=ref_nu, order=2)
    ref_c = coarsen(fr, ref_n // n)
    dist = l1_error(res.field, ref_c, spec.eos, res.t)
    if out:
        write_field_csv(res.field, spec.eos, os.path.join(out, f"{case}_imex{order}_n{n}.csv"))
        write_field_csv(fr, ref_spec.eos, os.path.join(out, f"{case}_reference_n{ref_n}.csv"))
    log(f"{case}: RS-IMEX order {order} n={n} vs reference n={ref_n}")
    for k in ("alpha1", "rho1", "rho2", "v1x", "v2x", "T"):
        log(f"  L1 {k:7s} {dist[k]:.4e}")
    return res, fr, dist


def _build_parser():
    p = argparse.ArgumentParser(prog="rsimex", description="Two-fluid RS-IMEX finite-volume solver")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one case")
    r.add_argument("--config", help="INI configuration file")
    r.add_argument("--case", choices=sorted(CASES))
    r.add_argument("--n", type=int)
    r.add_argument("--order", type=int, choices=(1, 2))
    r.add_argument("--nu", type=float, dest="cfl_nu")
    r.add_argument("--t-final", type=float, dest="t_final")
    r.add_argument("--out", dest="out_dir")
    r.add_argument("--format", action="append", dest="formats", choices=_FORMATS)
    r.add_argument("--cadence", type=int)
    r.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="case parameter, may be repeated")

    c = sub.add_parser("convergence", help="L1 errors and EOC against an exact solution")
    c.add_argument("--case", default="vortex-compressible")
    c.add_argument("--resolutions", type=int, nargs="+", default=[16, 32, 64, 128])
    c.add_argument("--order", type=int, choices=(1, 2), default=2)
    c.add_argument("--nu", type=float, default=0.25)
    c.add_argument("--t-final", type=float, dest="t_final")
    c.add_argument("--out", help="CSV file for the table (default: stdout only)")

    q = sub.add_parser("riemann-compare", help="RS-IMEX against the explicit reference solver")
    q.add_argument("--case", choices=("rp1", "rp2"), default="rp1")
    q.add_argument("--n", type=int, default=2000)
    q.add_argument("--order", type=int, choices=(1, 2), default=2)
    q.add_argument("--nu", type=float)
    q.add_argument("--ref-n", type=int, default=10000)
    q.add_argument("--ref-nu", type=float, default=0.2)
    q.add_argument("--out", default=None)

    v = sub.add_parser("vortex-profile", help="write the radial vortex table as CSV")
    v.add_argument("--kind", choices=("compressible", "weakly-compressible"), default="compressible")
    v.add_argument("--r-max", type=float, default=1.6)
    v.add_argument("--dr", type=float, default=1e-4)
    v.add_argument("--out", default=None)
    return p


def _settings_from_args(a):
    s = load_config(a.config) if a.config else Settings()
    if a.case is not None and a.case != s.case:
        s.case = a.case
        s.case_params = {}
    for key in ("n", "order", "cfl_nu", "t_final", "out_dir", "cadence"):
        val = getattr(a, key)
        if val is not None:
            setattr(s, key, val)
    if a.formats:
        s.formats = tuple(a.formats)
    allowed = _CASE_PARAMS.get(s.case, {})
    for item in a.param:
        if "=" not in item:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if k not in allowed:
            raise ConfigError(f"unknown parameter {k!r} for case {s.case!r}")
        s.case_params[k] = _convert("case", k, v, allowed[k])
    return s.validate()


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            execute_run(_settings_from_args(args))
        elif args.command == "convergence":
            errors, orders = convergence_table(args.case, args.resolutions, args.order, args.nu,
                                               t_final=args.t_final)
            text = format_table(args.resolutions, errors, orders)
            sys.stdout.write(text)
            if args.out:
                path = os.path.join(output_dir(os.path.dirname(args.out) or "."), os.path.basename(args.out))
                os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
                with open(path, "w") as fh:
                    fh.write(text)
        elif args.command == "riemann-compare":
            nu = args.nu if args.nu is not None else (0.8 if args.order == 1 else 0.4)
            out = output_dir(args.out) if (args.out or os.environ.get(OUTPUT_ENV)) else None
            riemann_compare(args.case, args.n, args.order, nu, args.ref_n, args.ref_nu, out)
        elif args.command == "vortex-profile":
            params = ev.compressible_params() if args.kind == "compressible" else ev.weakly_compressible_params()
            prof = ev.build_profile(params, r_max=args.r_max, dr=args.dr)
            out = output_dir(args.out or ".")
            path = os.path.join(out, f"vortex_{args.kind}_profile.csv")
            prof.to_csv(path)
            m1, m2, m = ev.mach_extrema(prof)
            print(f"wrote {path}; max Mach numbers phase1 {m1:.4f} phase2 {m2:.4f} mixture {m:.4f}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (AdmissibilityError, SolverError, ConsistencyError, DomainError, AccuracyError, OSError,
            ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
