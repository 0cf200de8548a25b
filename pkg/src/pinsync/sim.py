"""Fixed-step integration of the protocols, error series, and sweeps.

Integration is explicit (classical RK4 by default, Euler available) at a
fixed step: the right-hand sides are non-Lipschitz on the synchronization
manifold, so adaptive machinery whose error model assumes smoothness is
deliberately avoided.  Correctness is established by step-halving
convergence checks instead.

Recorded per sample: node states, target states, the error index
``E(t) = sqrt(sum_i ||x_i - s_k(i)||^2)`` and ``V(t) = E(t)^2 / 2``.
The measured settling time is the first recorded instant after which
``E`` stays below a tolerance for the rest of the horizon.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _fast
from .bounds import BoundsReport, compute_bounds
from .dynamics import (
    DEFAULT_DEAD_ZONE,
    NetworkSpec,
    SystemState,
    cluster_rhs,
    complete_rhs,
    equilibrium_residual,
    master_slave_rhs,
    nn_stabilization_rhs,
)
from .errors import DimensionError, DivergenceError, DomainError, RegimeError

#: Seed of the default initial-state policy; recorded so every run is
#: reproducible.
DEFAULT_SEED = 1729

#: Default tolerance on E(t) for settling detection, matching the resolution
#: at which synchronization is judged in practice.
DEFAULT_SETTLING_TOL = 1e-3

REGIMES = ("cluster", "consensus", "complete", "master-slave", "nn-stabilization")

_DYN_CODE = {"zero": _fast.DYN_ZERO, "linear_activation": _fast.DYN_LINEAR_ACTIVATION}
_ACT_CODE = {
    "identity": _fast.ACT_IDENTITY,
    "pwl_saturation": _fast.ACT_PWL_SATURATION,
    "tanh": _fast.ACT_TANH,
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    ``record_stride`` thins the stored samples: the run covers
    ``floor(t_end / (step * record_stride))`` whole record intervals, giving
    that count plus one samples.
    """

    step: float
    t_end: float
    method: str = "rk4"
    record_stride: int = 1
    dead_zone: float = DEFAULT_DEAD_ZONE

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise DomainError("step must be positive")
        if self.t_end <= 0:
            raise DomainError("t_end must be positive")
        if self.step > self.t_end:
            raise DomainError("step must not exceed t_end")
        if self.method not in ("rk4", "euler"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.record_stride < 1:
            raise DomainError("record_stride must be >= 1")

    def n_steps(self) -> int:
        intervals = int(math.floor(self.t_end / (self.step * self.record_stride) + 1e-9))
        return intervals * self.record_stride


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: sample grid, states, error series, settling time."""

    times: np.ndarray = field(repr=False)
    node_states: np.ndarray = field(repr=False)
    target_states: np.ndarray = field(repr=False)
    error_index: np.ndarray = field(repr=False)
    lyapunov: np.ndarray = field(repr=False)
    settling_time: Optional[float]

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "node_states": self.node_states.tolist(),
            "target_states": self.target_states.tolist(),
            "error_index": self.error_index.tolist(),
            "lyapunov": self.lyapunov.tolist(),
            "settling_time": self.settling_time,
        }


def initial_state(
    spec: NetworkSpec,
    policy: str = "uniform",
    seed: int = DEFAULT_SEED,
    scale: Optional[float] = None,
) -> SystemState:
    """Deterministic initial node states; targets start at the spec values.

    Policies:
      * ``"uniform"`` — each node component uniform in ``[-scale, scale]``
        (default scale 1);
      * ``"near-targets"`` — each node at its cluster target plus a uniform
        perturbation in ``[-scale, scale]`` (default scale 0.1).
    """
    rng = np.random.default_rng(seed)
    n, big_n = spec.n, spec.n_nodes
    if policy == "uniform":
        scale = 1.0 if scale is None else float(scale)
        nodes = rng.uniform(-scale, scale, size=(big_n, n))
    elif policy == "near-targets":
        scale = 0.1 if scale is None else float(scale)
        anchors = spec.target_initials[spec.partition.cluster_of_nodes()]
        nodes = anchors + rng.uniform(-scale, scale, size=(big_n, n))
    else:
        raise DomainError(f"unknown initial-state policy {policy!r}")
    return SystemState(nodes=nodes, targets=spec.target_initials.copy(), time=0.0)


def error_index(nodes, targets, partition) -> float:
    """Root of the summed squared node-to-cluster-target distances."""
    nodes = np.asarray(nodes, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if nodes.shape[0] != partition.n_nodes:
        raise DimensionError("node count does not match the partition")
    err = nodes - targets[partition.cluster_of_nodes()]
    return float(np.sqrt((err * err).sum()))


def detect_settling(times, series, tol: float) -> Optional[float]:
    """First sample time after which the series stays below ``tol``.

    Returns ``None`` when the final sample is still at or above ``tol``.
    Evaluated over the recorded horizon only; nothing is claimed beyond it.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    series = np.asarray(series, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if series.size == 0:
        raise DomainError("series must be non-empty")
    above = np.flatnonzero(series >= tol)
    if above.size == 0:
        return float(times[0])
    last_above = int(above[-1])
    if last_above == series.size - 1:
        return None
    return float(times[last_above + 1])


def _regime_checks(spec: NetworkSpec, regime: str, initial: SystemState) -> bool:
    """Validate the spec/regime combination; returns the freeze-targets flag."""
    if regime not in REGIMES:
        raise RegimeError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    spec.validate()
    if regime == "complete" and spec.m != 1:
        raise RegimeError("complete regime requires a single cluster")
    if regime == "master-slave" and (spec.m != 1 or spec.n_nodes != 1):
        raise RegimeError("master-slave regime requires a single node")
    if regime == "consensus" and spec.dynamics.kind != "zero":
        raise RegimeError("consensus regime requires zero intrinsic dynamics")
    freeze = regime == "nn-stabilization"
    if freeze:
        if spec.m != 1 or spec.n_nodes != 1:
            raise RegimeError("nn-stabilization regime requires a single node")
        residual = equilibrium_residual(spec.dynamics, initial.targets[0])
        if residual > 1e-8 * max(1.0, float(np.abs(initial.targets).max())):
            warnings.warn(
                f"supplied operating point has residual {residual:.3g}; "
                "it is not an equilibrium of the dynamics",
                stacklevel=3,
            )
    return freeze


def _python_driver(spec, regime, initial, cfg, freeze):
    """Reference integration path, used when the compiled kernel is not."""
    dz = cfg.dead_zone

    def rhs(x, s):
        state = SystemState(nodes=x, targets=s)
        if regime == "complete":
            return complete_rhs(spec, state, dz)
        if regime == "master-slave":
            return master_slave_rhs(spec.eps1, spec.eps2, spec.p, spec.q,
                                    spec.dynamics, x, s, dz)
        if regime == "nn-stabilization":
            dx = nn_stabilization_rhs(spec.dynamics, spec.eps1, spec.eps2,
                                      spec.p, spec.q, s, x, dz)
            return dx, np.zeros_like(s)
        return cluster_rhs(spec, state, dz)

    h = cfg.step
    n_steps = cfg.n_steps()
    stride = cfg.record_stride
    n_rec = n_steps // stride + 1
    xs = np.empty((n_rec, spec.n_nodes, spec.n))
    ss = np.empty((n_rec, spec.m, spec.n))
    x = initial.nodes.copy()
    s = initial.targets.copy()
    xs[0], ss[0] = x, s
    blow = -1
    rec = 1
    # Overflow is handled explicitly through the finiteness check below.
    with np.errstate(over="ignore", invalid="ignore"):
        for step_idx in range(1, n_steps + 1):
            dx1, ds1 = rhs(x, s)
            if cfg.method == "rk4":
                dx2, ds2 = rhs(x + 0.5 * h * dx1, s + 0.5 * h * ds1)
                dx3, ds3 = rhs(x + 0.5 * h * dx2, s + 0.5 * h * ds2)
                dx4, ds4 = rhs(x + h * dx3, s + h * ds3)
                x = x + (h / 6.0) * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
                s = s + (h / 6.0) * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4)
            else:
                x = x + h * dx1
                s = s + h * ds1
            if step_idx % stride == 0:
                xs[rec], ss[rec] = x, s
                if not (np.isfinite(x).all() and np.isfinite(s).all()):
                    blow = rec
                    break
                rec += 1
    return xs, ss, blow


def integrate(
    spec: NetworkSpec,
    regime: str,
    initial: SystemState,
    cfg: IntegratorConfig,
    settling_tol: float = DEFAULT_SETTLING_TOL,
) -> Trajectory:
    """Integrate one protocol run and record its error series.

    Deterministic: identical inputs give bit-identical trajectories.  For the
    ``nn-stabilization`` regime the single target row holds the operating
    point ``x*`` and is kept frozen.  Raises DivergenceError (with the
    blow-up time) if the state leaves the finite range.
    """
    freeze = _regime_checks(spec, regime, initial)
    if initial.nodes.shape != (spec.n_nodes, spec.n):
        raise DimensionError(
            f"initial node states have shape {initial.nodes.shape}, spec "
            f"needs ({spec.n_nodes}, {spec.n})"
        )
    if initial.targets.shape != (spec.m, spec.n):
        raise DimensionError(
            f"initial target states have shape {initial.targets.shape}, spec "
            f"needs ({spec.m}, {spec.n})"
        )

    use_fast = _fast.HAVE_NUMBA and spec.dynamics.kind in _DYN_CODE
    if use_fast:
        dyn = spec.dynamics
        n = spec.n
        w1 = np.zeros((n, n)) if dyn.w1 is None else dyn.w1
        w2 = np.zeros((n, n)) if dyn.w2 is None else dyn.w2
        bias = np.zeros(n) if dyn.bias is None else dyn.bias
        xs, ss, blow = _fast._integrate_network(
            initial.nodes.astype(np.float64), initial.targets.astype(np.float64),
            spec.a, spec.b,
            spec.partition.cluster_of_nodes(),
            np.isin(np.arange(spec.n_nodes), spec.pinned_nodes()),
            float(spec.alpha), float(spec.beta), float(spec.eps1),
            float(spec.eps2), float(spec.p), float(spec.q),
            float(cfg.dead_zone),
            _DYN_CODE[dyn.kind], _ACT_CODE[dyn.activation],
            w1, w2, bias, freeze,
            float(cfg.step), cfg.n_steps(), cfg.record_stride,
            cfg.method == "rk4",
        )
    else:
        xs, ss, blow = _python_driver(spec, regime, initial, cfg, freeze)

    dt_rec = cfg.step * cfg.record_stride
    if blow >= 0:
        raise DivergenceError(blow * dt_rec)
    times = np.arange(xs.shape[0]) * dt_rec
    err = xs - ss[:, spec.partition.cluster_of_nodes(), :]
    sq = (err * err).sum(axis=(1, 2))
    e_series = np.sqrt(sq)
    v_series = 0.5 * sq
    return Trajectory(
        times=times,
        node_states=xs,
        target_states=ss,
        error_index=e_series,
        lyapunov=v_series,
        settling_time=detect_settling(times, e_series, settling_tol),
    )


def integrate_intrinsic(dyn, x0, cfg: IntegratorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the uncoupled dynamics ``dx/dt = f(x)`` for one node.

    Returns ``(times, states)`` with states of shape ``(samples, n)``.
    """
    x0 = np.asarray(x0, dtype=np.float64).reshape(1, -1)
    if x0.shape[1] != dyn.n:
        raise DimensionError("initial state dimension does not match dynamics")
    if _fast.HAVE_NUMBA and dyn.kind in _DYN_CODE:
        n = dyn.n
        w1 = np.zeros((n, n)) if dyn.w1 is None else dyn.w1
        w2 = np.zeros((n, n)) if dyn.w2 is None else dyn.w2
        bias = np.zeros(n) if dyn.bias is None else dyn.bias
        xs, _, blow = _fast._integrate_network(
            x0, x0.copy(), np.zeros((1, 1)), np.zeros((1, 1)),
            np.zeros(1, dtype=np.int64), np.zeros(1, dtype=bool),
            1.0, 1.0, 0.0, 0.0, 0.5, 2.0, float(cfg.dead_zone),
            _DYN_CODE[dyn.kind], _ACT_CODE[dyn.activation], w1, w2, bias,
            True, float(cfg.step), cfg.n_steps(), cfg.record_stride,
            cfg.method == "rk4",
        )
    else:
        spec = NetworkSpec.master_slave(dyn, eps1=0.0, eps2=0.0, p=0.5, q=2.0,
                                        target_initial=x0[0])
        xs, _, blow = _python_driver(spec, "nn-stabilization",
                                     SystemState(x0, x0.copy()), cfg, True)
    dt_rec = cfg.step * cfg.record_stride
    if blow >= 0:
        raise DivergenceError(blow * dt_rec)
    times = np.arange(xs.shape[0]) * dt_rec
    return times, xs[:, 0, :]


@dataclass(frozen=True)
class ViolationSummary:
    """Outcome of checking the guaranteed decay inequality along a run."""

    violations: int
    worst_excess: float
    checked: int


def lyapunov_inequality_check(traj: Trajectory, report: BoundsReport) -> ViolationSummary:
    """Check ``dV/dt <= -margin_p * V**((1+p)/2)`` (``V < 1``) and the
    q-branch (``V >= 1``) along a recorded run.

    ``dV/dt`` is estimated by centered differences on the recorded grid;
    a sample counts as a violation when the estimate exceeds the bound by
    more than ``max(1e-6, 0.05 * |bound|)``.  Informational when the report
    is infeasible — no guarantee exists there.
    """
    v = traj.lyapunov
    t = traj.times
    if len(v) < 3:
        return ViolationSummary(violations=0, worst_excess=0.0, checked=0)
    margin_p = report.alpha_bar - report.gamma1 - 2.0 * report.delta
    margin_q = report.beta_bar - report.gamma2 - 2.0 * report.delta
    vdot = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    v_mid = v[1:-1]
    bound = np.where(
        v_mid < 1.0,
        -margin_p * v_mid ** ((1.0 + report.p) / 2.0),
        -margin_q * v_mid ** ((1.0 + report.q) / 2.0),
    )
    slack = np.maximum(1e-6, 0.05 * np.abs(bound))
    excess = vdot - bound - slack
    bad = excess > 0
    return ViolationSummary(
        violations=int(bad.sum()),
        worst_excess=float(excess.max()) if bad.any() else 0.0,
        checked=int(v_mid.size),
    )


def step_convergence_check(
    spec: NetworkSpec, regime: str, initial: SystemState, cfg: IntegratorConfig
) -> float:
    """Relative change of the final error index when the step is halved.

    Meaningful on horizons where the error has not yet hit the numerical
    noise floor; returns 0 when both final errors are below 1e-9.
    """
    half = replace(cfg, step=cfg.step / 2.0, record_stride=cfg.record_stride * 2)
    e_full = integrate(spec, regime, initial, cfg).error_index[-1]
    e_half = integrate(spec, regime, initial, half).error_index[-1]
    denom = max(abs(e_full), abs(e_half))
    if denom < 1e-9:
        return 0.0
    return abs(e_full - e_half) / denom


@dataclass(frozen=True)
class SweepRow:
    """One parameter value of a sweep."""

    value: float
    settling_time: Optional[float]
    t_max: Optional[float]
    feasible: bool
    note: Optional[str] = None


def sweep(
    spec: NetworkSpec,
    param: str,
    values: Sequence[float],
    cfg: IntegratorConfig,
    *,
    delta: float = 0.0,
    initial: Optional[SystemState] = None,
    policy: str = "uniform",
    seed: int = DEFAULT_SEED,
    scale: Optional[float] = None,
    settling_tol: float = DEFAULT_SETTLING_TOL,
    tie_pin_gains: bool = True,
) -> list[SweepRow]:
    """One integration per parameter value, identical initial states.

    ``param`` is one of ``alpha``, ``beta``, ``p``, ``q``.  When
    ``tie_pin_gains`` is set and the base spec uses ``eps1 == alpha``
    (respectively ``eps2 == beta``), sweeping the coupling gain moves the
    pin gain with it, matching how the reference scenario is defined.
    Divergent runs are reported per-row in ``note`` rather than aborting
    the sweep.
    """
    if param not in ("alpha", "beta", "p", "q"):
        raise DomainError(f"cannot sweep parameter {param!r}")
    state0 = initial if initial is not None else initial_state(spec, policy, seed, scale)
    rows: list[SweepRow] = []
    for value in values:
        value = float(value)
        changes = {param: value}
        if param == "alpha" and tie_pin_gains and spec.eps1 == spec.alpha:
            changes["eps1"] = value
        if param == "beta" and tie_pin_gains and spec.eps2 == spec.beta:
            changes["eps2"] = value
        spec_v = replace(spec, **changes)
        report = compute_bounds(spec_v, delta)
        try:
            traj = integrate(spec_v, "cluster", state0, cfg, settling_tol)
            rows.append(SweepRow(value=value, settling_time=traj.settling_time,
                                 t_max=report.t_max, feasible=report.feasible))
        except DivergenceError as exc:
            rows.append(SweepRow(value=value, settling_time=None,
                                 t_max=report.t_max, feasible=report.feasible,
                                 note=f"diverged at t={exc.blow_up_time:.6g}"))
    return rows


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Header ``t,E,V,x_1_1,...,x_N_n,s_1_1,...,s_m_n`` (indices one-based)."""
    n_nodes, n = traj.node_states.shape[1:]
    m = traj.target_states.shape[1]
    cols = ["t", "E", "V"]
    cols += [f"x_{i + 1}_{l + 1}" for i in range(n_nodes) for l in range(n)]
    cols += [f"s_{k + 1}_{l + 1}" for k in range(m) for l in range(n)]
    data = np.column_stack([
        traj.times,
        traj.error_index,
        traj.lyapunov,
        traj.node_states.reshape(traj.n_samples, -1),
        traj.target_states.reshape(traj.n_samples, -1),
    ])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="",
               fmt="%.17g")


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    """Header ``param_value,settling_measured,T_max_theoretical,feasible``."""
    lines = ["param_value,settling_measured,T_max_theoretical,feasible"]
    for row in rows:
        settling = "" if row.settling_time is None else f"{row.settling_time:.17g}"
        t_max = "" if row.t_max is None else f"{row.t_max:.17g}"
        lines.append(f"{row.value:.17g},{settling},{t_max},{str(row.feasible).lower()}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
