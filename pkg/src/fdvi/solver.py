"""The mild-solution engine.

The integral representation splits into a fuzzy part (kernel integrals of
the selection f) and a control part (kernel integrals of g(t,y)u plus the
boundary functionals of c1, c2).  A damped Picard sweep

    y <- (1 - theta) y + theta [ phi_part(f(y)) + psi_part(y, u(y)) ]

iterates the composed operator from y = 0, with f chosen by a constant
selection policy from the field's alpha-level and u solved node-wise from
the variational inequality.  Convergence is monitored empirically: the
fuzzy part is a set-valued contraction when rho = 2 L_F T^q / Gamma(q+1)
is below one, and the solver warns when its sampled rho estimate is not.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    MaxPicardExceeded,
    NonfiniteValue,
    NotConvergedError,
)
from .expr import evaluate
from .fractional import GridFunction, UniformGrid, caputo_residual, frac_integral, frac_integral_all, trapezoid_integral
from .problem import ProblemSpec, SelectionPolicy, SolverConfig
from .special import gamma
from .vi import VIInstance, solve_vi, vi_residual


def _eval_grid(exprs, ts: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate a sequence of expressions over all nodes; returns (N+1, len(exprs))."""
    out = np.empty((ts.shape[0], len(exprs)))
    for j, e in enumerate(exprs):
        out[:, j] = np.broadcast_to(np.asarray(evaluate(e, ts, ys), dtype=float), ts.shape)
    return out


def _g_times(spec: ProblemSpec, ts: np.ndarray, ys: np.ndarray, h_vals: np.ndarray) -> np.ndarray:
    """Rows g(t_i, y_i) @ h_i for all nodes; returns (N+1, n)."""
    out = np.zeros((ts.shape[0], spec.n))
    for i, row in enumerate(spec.g):
        for j, e in enumerate(row):
            gij = np.broadcast_to(np.asarray(evaluate(e, ts, ys), dtype=float), ts.shape)
            out[:, i] += gij * h_vals[:, j]
    return out


def _kernel_pair(spec: ProblemSpec, w: GridFunction) -> np.ndarray:
    """I^q w(t) - (t/T) I^q w(T): the recurring kernel bracket of the mild formula."""
    fi = frac_integral_all(spec.q, w)
    ts = w.grid.nodes
    return fi.values - (ts / spec.T)[:, None] * fi.values[-1][None, :]


def phi_part(spec: ProblemSpec, f: GridFunction) -> GridFunction:
    """Fuzzy half of the mild operator applied to a selection f."""
    return GridFunction(f.grid, _kernel_pair(spec, f))


def psi_part(spec: ProblemSpec, y: GridFunction, h: GridFunction) -> GridFunction:
    """Control half: kernel bracket of g(t,y)h plus the c1/c2 boundary functionals."""
    grid = y.grid
    ts = grid.nodes
    gh = GridFunction(grid, _g_times(spec, ts, y.values, h.values))
    vals = _kernel_pair(spec, gh)
    ic1 = trapezoid_integral(GridFunction(grid, _eval_grid(spec.c1, ts, y.values)))
    ic2 = trapezoid_integral(GridFunction(grid, _eval_grid(spec.c2, ts, y.values)))
    frac = (ts / spec.T)[:, None]
    vals = vals + frac * ic2[None, :] + (1.0 - frac) * ic1[None, :]
    return GridFunction(grid, vals)


def control_map(spec: ProblemSpec, y: GridFunction, vi_tol: float = 1e-10) -> GridFunction:
    """Node-wise VI solve u(t_i) in SOL(K, Q(t_i, y_i) + S(.)), each node certified.

    Within a sweep the previous node's solution warm-starts the next one;
    u(t) varies continuously, so this typically costs a couple of
    iterations per node.
    """
    grid = y.grid
    ts = grid.nodes
    w_all = _eval_grid(spec.Q, ts, y.values)
    out = np.empty((grid.N + 1, spec.m))
    u_prev = spec.anchor_u0
    for i in range(grid.N + 1):
        inst = VIInstance(spec.K, w_all[i], spec.S)
        try:
            u = solve_vi(inst, tol=vi_tol, start=u_prev)
        except NotConvergedError as exc:
            raise NotConvergedError(
                f"VI solve failed at node {i}", residual=exc.residual, iterations=exc.iterations, node=i
            ) from exc
        res = vi_residual(inst, u)
        if res > vi_tol:
            raise NotConvergedError(f"VI certificate failed at node {i}", residual=res, iterations=0, node=i)
        out[i] = u
        u_prev = u
    return GridFunction(grid, out)


def selection_map(spec: ProblemSpec, y: GridFunction, policy: SelectionPolicy) -> GridFunction:
    """f(t_i) = midpoint + (lam/2) width of the alpha-level box at (t_i, y_i)."""
    if policy.dim != spec.n:
        raise DimensionMismatch(f"policy has dimension {policy.dim}, problem n = {spec.n}")
    lo, hi = spec.field.level_arrays(y.grid.nodes, y.values, spec.alpha)
    mid = 0.5 * (lo + hi)
    return GridFunction(y.grid, mid + 0.5 * policy.lam[None, :] * (hi - lo))


def nearest_selection(spec: ProblemSpec, f1: GridFunction, y2: GridFunction) -> GridFunction:
    """Clamp a selection onto the level boxes along another trajectory.

    Node-wise this realizes the nearest measurable selection: the moved
    distance is bounded by the Hausdorff distance between the two boxes.
    """
    lo, hi = spec.field.level_arrays(y2.grid.nodes, y2.values, spec.alpha)
    return GridFunction(f1.grid, np.clip(f1.values, lo, hi))


def _estimate_rho(spec: ProblemSpec, samples: int = 2048, seed: int = 0) -> float:
    """Cheap sampled contraction constant, used only for the pre-solve warning."""
    from .hypotheses import estimate_field_lipschitz  # local import to avoid a cycle

    box_lo = np.full(spec.n, -5.0)
    box_hi = np.full(spec.n, 5.0)
    lf = estimate_field_lipschitz(spec.field, box_lo, box_hi, spec.T, pairs=samples, seed=seed, polish=False)
    return 2.0 * lf * spec.T**spec.q / gamma(spec.q + 1.0)


@dataclass
class SolutionBundle:
    """Converged trajectories plus certificates.

    y is the mild trajectory, u the variational control trajectory, f the
    fuzzy selection actually used; diagnostics carries the residual history
    and the certificate values.
    """

    y: GridFunction
    u: GridFunction
    f: GridFunction
    alpha: float
    lam: np.ndarray
    diagnostics: dict

    def write_csv(self, path) -> None:
        """Write "t, y1..yn, u1..um, f1..fn" rows at full double precision."""
        n, m = self.y.dim, self.u.dim
        header = (
            ["t"]
            + [f"y{i + 1}" for i in range(n)]
            + [f"u{j + 1}" for j in range(m)]
            + [f"f{i + 1}" for i in range(n)]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, t in enumerate(self.y.grid.nodes):
                row = [f"{t:.17g}"]
                row += [f"{v:.17g}" for v in self.y.values[i]]
                row += [f"{v:.17g}" for v in self.u.values[i]]
                row += [f"{v:.17g}" for v in self.f.values[i]]
                writer.writerow(row)

    def write_diagnostics(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.diagnostics, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_solution_csv(path) -> tuple[GridFunction, GridFunction, GridFunction]:
    """Read a bundle CSV back into (y, u, f) grid functions."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.asarray(rows)
    n = sum(1 for name in header if name.startswith("y"))
    m = sum(1 for name in header if name.startswith("u"))
    grid = UniformGrid(float(data[-1, 0]), data.shape[0] - 1)
    y = GridFunction(grid, data[:, 1 : 1 + n])
    u = GridFunction(grid, data[:, 1 + n : 1 + n + m])
    f = GridFunction(grid, data[:, 1 + n + m : 1 + 2 * n + m])
    return y, u, f


def _apply_operator(spec, cfg, policy, y):
    u = control_map(spec, y, vi_tol=cfg.vi_tol)
    f = selection_map(spec, y, policy)
    ty = phi_part(spec, f).values + psi_part(spec, y, u).values
    return ty, u, f


def picard_solve(
    spec: ProblemSpec,
    cfg: SolverConfig | None = None,
    policy: SelectionPolicy | None = None,
    warn_on_rho: bool = True,
) -> SolutionBundle:
    """Iterate the discrete mild operator to a fixed point.

    Starts from y = 0 (or cfg.y0), recomputes the control trajectory from
    scratch every sweep, and stops when the sup-node change drops below
    picard_tol.  Raises MaxPicardExceeded with the residual history when
    the cap is hit and NonfiniteValue if an iterate blows up.
    """
    cfg = cfg or SolverConfig()
    policy = policy or SelectionPolicy.constant(0.0, spec.n)
    if warn_on_rho:
        rho = _estimate_rho(spec)
        if rho >= 1.0:
            warnings.warn(
                f"sampled contraction constant rho = {rho:.4g} >= 1; "
                "the fuzzy part may not contract and the sweep may diverge",
                stacklevel=2,
            )
    grid = UniformGrid(spec.T, cfg.N)
    if cfg.y0 is None:
        y = GridFunction.zeros(grid, spec.n)
    else:
        y = GridFunction(grid, np.tile(cfg.y0, (grid.N + 1, 1)))
    history: list[float] = []
    theta = cfg.damping
    converged = False
    u = f = None
    for sweep in range(1, cfg.max_picard + 1):
        try:
            ty, u, f = _apply_operator(spec, cfg, policy, y)
        except DomainError as exc:
            # GridFunction construction inside the operator rejects inf/NaN
            if "finite" in str(exc):
                raise NonfiniteValue(
                    f"non-finite values while applying the operator at sweep {sweep}",
                    iteration=sweep, node=-1,
                ) from exc
            raise
        if not np.all(np.isfinite(ty)):
            bad = int(np.argwhere(~np.isfinite(ty))[0][0])
            raise NonfiniteValue(
                f"non-finite iterate at sweep {sweep}, node {bad}", iteration=sweep, node=bad
            )
        new_vals = (1.0 - theta) * y.values + theta * ty
        res = float(np.max(np.abs(new_vals - y.values)))
        history.append(res)
        y = GridFunction(grid, new_vals)
        if res <= cfg.picard_tol:
            converged = True
            break
    if not converged:
        raise MaxPicardExceeded(
            f"no fixed point within {cfg.max_picard} sweeps (last change {history[-1]:.3e})",
            residual_history=history,
        )
    # Recompute the trajectories at the final y so the bundle is self-consistent,
    # and measure how far one more application of the operator moves it.
    ty, u, f = _apply_operator(spec, cfg, policy, y)
    recheck = float(np.max(np.abs(ty - y.values)))
    gh = GridFunction(grid, _g_times(spec, grid.nodes, y.values, u.values))
    rhs = GridFunction(grid, f.values + gh.values)
    max_vi = max(
        vi_residual(VIInstance(spec.K, w, spec.S), u.values[i])
        for i, w in enumerate(_eval_grid(spec.Q, grid.nodes, y.values))
    )
    ic1 = trapezoid_integral(GridFunction(grid, _eval_grid(spec.c1, grid.nodes, y.values)))
    ic2 = trapezoid_integral(GridFunction(grid, _eval_grid(spec.c2, grid.nodes, y.values)))
    # The formula pins the operator output at t = 0 to the c1 trapezoid exactly;
    # checking it on the recheck application verifies the wiring.  The self-gap
    # of the returned iterate is convergence-limited at O(picard residual).
    boundary = float(np.max(np.abs(ty[0] - ic1)))
    boundary_selfgap = float(np.max(np.abs(y.values[0] - ic1)))
    # y'(T) from differentiating the integral representation; reported, never enforced.
    dT = (
        frac_integral(spec.q - 1.0, rhs, grid.N)
        - frac_integral(spec.q, rhs, grid.N) / spec.T
        + (ic2 - ic1) / spec.T
    )
    yprime_gap = float(np.linalg.norm(dT - ic2))
    diagnostics = {
        "alpha": spec.alpha,
        "lambda": policy.lam.tolist(),
        "N": cfg.N,
        "q": spec.q,
        "T": spec.T,
        "damping": cfg.damping,
        "picard_tol": cfg.picard_tol,
        "vi_tol": cfg.vi_tol,
        "iterations": len(history),
        "converged": True,
        "picard_residuals": history,
        "final_residual": history[-1],
        "fixed_point_recheck": recheck,
        "max_vi_residual": float(max_vi),
        "boundary_residual": boundary,
        "boundary_selfgap": boundary_selfgap,
        "caputo_residual": caputo_residual(spec.q, y, rhs),
        "yprime_T_mismatch": yprime_gap,
    }
    return SolutionBundle(y=y, u=u, f=f, alpha=spec.alpha, lam=policy.lam, diagnostics=diagnostics)


@dataclass
class BandRun:
    """Outcome of one (alpha, lambda) solve inside a band sweep."""

    alpha: float
    lam: np.ndarray
    bundle: SolutionBundle | None
    error: str | None

    @property
    def ok(self) -> bool:
        return self.bundle is not None


def solve_band(
    spec: ProblemSpec,
    cfg: SolverConfig,
    alphas,
    lambdas,
    warn_on_rho: bool = False,
) -> list[BandRun]:
    """One solve per (alpha, lambda) pair; failures are captured per run."""
    runs: list[BandRun] = []
    for alpha in alphas:
        spec_a = ProblemSpec(
            q=spec.q, T=spec.T, n=spec.n, m=spec.m, field=spec.field, alpha=float(alpha),
            g=spec.g, Q=spec.Q, S=spec.S, K=spec.K, c1=spec.c1, c2=spec.c2, anchor_u0=spec.anchor_u0,
        )
        for lam in lambdas:
            policy = SelectionPolicy(np.broadcast_to(np.atleast_1d(np.asarray(lam, dtype=float)), (spec.n,)).copy())
            try:
                bundle = picard_solve(spec_a, cfg, policy, warn_on_rho=warn_on_rho)
                runs.append(BandRun(float(alpha), policy.lam, bundle, None))
            except Exception as exc:  # per-run status, partial results are useful
                runs.append(BandRun(float(alpha), policy.lam, None, f"{type(exc).__name__}: {exc}"))
    return runs


def band_envelope(runs: list[BandRun]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node min/max of y over the converged runs: (nodes, ymin, ymax)."""
    bundles = [r.bundle for r in runs if r.bundle is not None]
    if not bundles:
        raise ValueError("no converged runs to build an envelope from")
    nodes = bundles[0].y.grid.nodes
    stack = np.stack([b.y.values for b in bundles])
    return nodes, stack.min(axis=0), stack.max(axis=0)
