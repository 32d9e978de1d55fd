"""Time step selection and IMEX Runge-Kutta orchestration."""
from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np

from .core_state import Field, apply_bc, check_state
from .errors import ConfigError, AdmissibilityError, SolverError
from .explicit_stage import explicit_rhs, max_speed
from .implicit_stage import SolverOptions, implicit_stage


@dataclass(frozen=True)
class ButcherPair:
    """Implicit tableau (A, b, d) and explicit tableau (At, bt, dt)."""

    A: np.ndarray
    b: np.ndarray
    At: np.ndarray
    bt: np.ndarray
    gsa: bool = True
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        At = np.asarray(self.At, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "At", At)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "bt", np.asarray(self.bt, dtype=float))
        s = A.shape[0]
        if A.shape != (s, s) or At.shape != (s, s) or self.b.shape != (s,) or self.bt.shape != (s,):
            raise ConfigError("tableau shapes are inconsistent")
        if np.any(np.triu(A, 1) != 0.0):
            raise ConfigError("implicit tableau must be lower triangular")
        if np.any(np.triu(At, 0) != 0.0):
            raise ConfigError("explicit tableau must be strictly lower triangular")
        for j in range(s):
            if A[j, j] == 0.0 and np.any(A[:, j] != 0.0):
                raise ConfigError(f"stage {j} has no implicit solve but its implicit increment is used")
        if self.gsa and not self.is_gsa():
            raise ConfigError("tableau is not globally stiffly accurate")

    @property
    def stages(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.sum(axis=1)

    @property
    def dt_(self):
        return self.At.sum(axis=1)

    def is_gsa(self):
        return bool(np.array_equal(self.A[-1], self.b) and np.array_equal(self.At[-1], self.bt))


def euler_pair():
    return ButcherPair([[0.0, 0.0], [0.0, 1.0]], [0.0, 1.0],
                       [[0.0, 0.0], [1.0, 0.0]], [1.0, 0.0], name="euler")


def ars222():
    g = 1.0 - 1.0 / math.sqrt(2.0)
    d = 1.0 - 1.0 / (2.0 * g)
    A = [[0.0, 0.0, 0.0], [0.0, g, 0.0], [0.0, 1.0 - g, g]]
    At = [[0.0, 0.0, 0.0], [g, 0.0, 0.0], [d, 1.0 - d, 0.0]]
    return ButcherPair(A, [0.0, 1.0 - g, g], At, [d, 1.0 - d, 0.0], name="ars222")


def tableau_for_order(order):
    return euler_pair() if order == 1 else ars222()


def compute_dt(f, nu, dt_max=np.inf, ref_speed=None):
    """Material CFL time step nu * dx / max |lambda_v|.

    ``ref_speed`` replaces the measured maximum speed by a fixed value.
    """
    if not 0.0 < nu <= 1.0:
        raise ConfigError(f"CFL number must lie in (0, 1], got {nu}")
    g = f.grid
    h = g.dx if g.dims == 1 else min(g.dx, g.dy)
    if ref_speed is not None:
        return min(nu * h / ref_speed, dt_max)
    q = f.interior
    s = float(np.max(max_speed(q, 0)))
    if g.dims == 2:
        s = max(s, float(np.max(max_speed(q, 1))))
    if s <= 0.0:
        if not np.isfinite(dt_max):
            raise ConfigError("quiescent field needs a finite dt_max")
        return dt_max
    return min(nu * h / s, dt_max)


@dataclass
class StepContext:
    eos: object
    rs: object
    order: int = 2
    options: SolverOptions = field(default_factory=SolverOptions)
    exact: Optional[Callable] = None
    alpha_dissipation: bool = True
    check: bool = True


def imex_step(f, dt, tableau, ctx, t=0.0):
    """Advance ``f`` by one IMEX-RK step; returns ``(field, linear iterations)``."""
    s = tableau.stages
    A, At = tableau.A, tableau.At
    c_ex = tableau.dt_
    qn = f.interior.copy()
    stages, E, I = [], [], []
    iters = 0
    for k in range(s):
        qhat = qn.copy()
        for j in range(k):
            if At[k, j] != 0.0:
                qhat += dt * At[k, j] * E[j]
            if A[k, j] != 0.0:
                qhat += dt * A[k, j] * I[j]
        fk = Field.from_interior(f.grid, qhat)
        apply_bc(fk, ctx.exact, t + c_ex[k] * dt)
        if A[k, k] != 0.0:
            coef = stages[-1] if stages else f
            try:
                fk, info = implicit_stage(fk, coef, A[k, k] * dt, ctx.rs, ctx.eos, ctx.options, ctx.check)
            except (AdmissibilityError, SolverError) as exc:
                exc.args = (f"stage {k}: {exc.args[0]}",) + exc.args[1:]
                raise
            iters += info.iterations
            apply_bc(fk, ctx.exact, t + tableau.d[k] * dt)
            I.append((fk.interior - qhat) / (A[k, k] * dt))
        else:
            if ctx.check and k > 0:
                check_state(fk.interior, ctx.eos, f"stage {k}")
            I.append(np.zeros_like(qhat))
        stages.append(fk)
        if k < s - 1 or not tableau.gsa:
            E.append(explicit_rhs(fk, ctx.eos, ctx.order, ctx.alpha_dissipation))
        else:
            E.append(None)
    if tableau.gsa:
        out = stages[-1]
    else:
        q = qn.copy()
        for j in range(s):
            q += dt * (tableau.bt[j] * E[j] + tableau.b[j] * I[j])
        out = Field.from_interior(f.grid, q)
        apply_bc(out, ctx.exact, t + dt)
        if ctx.check:
            check_state(out.interior, ctx.eos, "final combination")
    return out, iters


@dataclass
class RunConfig:
    case: str = "rp1"
    n: int = 100
    cfl_nu: float = 0.25
    t_final: Optional[float] = None
    order: int = 2
    output_every: int = 0
    output_times: tuple = ()
    dt_max: float = np.inf
    max_steps: int = 10_000_000
    case_params: dict = field(default_factory=dict)
    solver: SolverOptions = field(default_factory=SolverOptions)
    report_every: int = 0

    def __post_init__(self):
        if not 0.0 < self.cfl_nu <= 1.0:
            raise ConfigError(f"cfl_nu must lie in (0, 1], got {self.cfl_nu}")
        if self.order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {self.order}")
        if self.t_final is not None and self.t_final < 0.0:
            raise ConfigError("t_final must be nonnegative")


@dataclass
class RunResult:
    spec: object
    field: Field
    t: float
    steps: int
    snapshots: list
    reports: list
    linear_iterations: int
    dts: list


def run(config, spec=None, callback=None):
    """Integrate a case to its final time.

    ``snapshots`` holds ``(t, Field)`` pairs at t=0, the requested output
    times/cadence and the final time; ``reports`` holds FieldReports at the
    same instants.
    """
    from .cases import build_case
    from .diagnostics import field_report
    from .implicit_stage import reference_state_from_field

    if spec is None:
        spec = build_case(config.case, config.n, **config.case_params)
    t_final = spec.t_final if config.t_final is None else config.t_final
    eos = spec.eos
    f = spec.initial.copy()
    apply_bc(f, spec.exact, 0.0)
    rs = reference_state_from_field(f, eos)
    ctx = StepContext(eos, rs, config.order, config.solver, spec.exact)
    tableau = tableau_for_order(config.order)
    targets = sorted(t for t in config.output_times if 0.0 < t < t_final)
    snapshots = [(0.0, f.copy())]
    reports = [field_report(f, eos, 0.0, 0, 0.0, 0, spec.exact)]
    t, step, total_iters, dts = 0.0, 0, 0, []
    while t < t_final * (1.0 - 1e-14) and step < config.max_steps:
        dt = compute_dt(f, config.cfl_nu, config.dt_max, spec.ref_speed)
        stop = targets[0] if targets else t_final
        hit = False
        if t + dt >= stop * (1.0 - 1e-12):
            dt = stop - t
            hit = True
        try:
            f, iters = imex_step(f, dt, tableau, ctx, t)
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            exc.args = (f"step {step} at t={t:.6g}: {exc}",)
            raise
        total_iters += iters
        step += 1
        t = stop if hit else t + dt
        dts.append(dt)
        if hit and targets:
            targets.pop(0)
        cadence = config.output_every and step % config.output_every == 0
        if (hit and t < t_final) or cadence:
            snapshots.append((t, f.copy()))
            reports.append(field_report(f, eos, t, step, dt, iters, spec.exact))
        elif config.report_every and step % config.report_every == 0:
            reports.append(field_report(f, eos, t, step, dt, iters, spec.exact))
        if callback is not None:
            callback(t, step, f)
    if t_final == 0.0 or snapshots[-1][0] != t:
        if t > 0.0:
            snapshots.append((t, f.copy()))
            reports.append(field_report(f, eos, t, step, dts[-1] if dts else 0.0, 0, spec.exact))
    return RunResult(spec, f, t, step, snapshots, reports, total_iters, dts)
