"""The adaptive loop: solve, estimate, mark with the cardinality-capped
regular/irregular decision, refine, and record one row per level.

Each level solves exactly one primal and one dual problem (the dual cycles
through the goals); the stiffness matrix is factored once per level and
reused. Optionally all duals are solved once on the initial level to sort
the goals by their estimator size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import IndicatorField, residual_indicators
from .fem import GalerkinSolver, ProblemData, build_space, evaluate_functionals
from .marking import (ActiveHistory, CAP_LARGEST, EMPTY, IRREGULAR,
                      MarkDecision, REGULAR, combine_marks, decide_marking,
                      doerfler_min, irregular_select)
from .mesh import Mesh, refine_nvb

INITIAL = "initial"

MODE_NGO = "ngo"
MODE_AFEM_ONLY = "afem_only"

_SAFETY_MAX_LEVELS = 100_000


class ParameterError(ValueError):
    """Adaptivity parameters outside their admissible ranges."""


@dataclass(frozen=True)
class AdaptiveConfig:
    theta: float = 0.5
    c_mark: float = 2.0
    rho_irr: float = 0.25
    n_goals: int = 1
    degree: int = 1
    irregular_variant: str = CAP_LARGEST
    initial_sort: bool = False
    neumann_residual: bool = True
    max_ndof: int | None = None
    max_levels: int | None = None
    estimator_tol: float | None = None


def validate_params(cfg: AdaptiveConfig, d: int = 2) -> tuple[float, list[str]]:
    """Check hard parameter constraints; returns (q_est, warnings).

    q_est = sqrt(1 - (1 - q_red^2) * theta) with q_red = 2^(-1/(2d)) is the
    estimator reduction factor of one Doerfler-marked bisection step. The
    threshold rho_irr < (1 - q_est)/(N - 1) only matters for the theory, so
    exceeding it warns instead of rejecting.
    """
    if not 0.0 < cfg.theta <= 1.0:
        raise ParameterError(f"theta must be in (0, 1], got {cfg.theta}")
    if cfg.c_mark < 1.0:
        raise ParameterError(f"c_mark must be >= 1, got {cfg.c_mark}")
    if cfg.n_goals < 1:
        raise ParameterError(f"n_goals must be >= 1, got {cfg.n_goals}")
    if cfg.degree not in (1, 2):
        raise ParameterError(f"degree must be 1 or 2, got {cfg.degree}")
    if cfg.irregular_variant not in (CAP_LARGEST, EMPTY):
        raise ParameterError(f"unknown irregular_variant {cfg.irregular_variant!r}")
    if cfg.n_goals >= 2:
        limit = 1.0 / (cfg.n_goals - 1)
        if not 0.0 < cfg.rho_irr < limit:
            raise ParameterError(
                f"rho_irr must be in (0, {limit:g}) for {cfg.n_goals} goals, "
                f"got {cfg.rho_irr}")
    if cfg.max_ndof is None and cfg.max_levels is None and cfg.estimator_tol is None:
        raise ParameterError("set at least one stopping criterion")

    q_red = 2.0 ** (-1.0 / (2 * d))
    q_est = math.sqrt(1.0 - (1.0 - q_red ** 2) * cfg.theta)
    warnings = []
    if cfg.n_goals >= 2:
        threshold = (1.0 - q_est) / (cfg.n_goals - 1)
        if cfg.rho_irr >= threshold:
            warnings.append(
                f"rho_irr = {cfg.rho_irr:g} is above the contraction threshold "
                f"(1 - q_est)/(N - 1) = {threshold:.6g}; convergence is not "
                f"covered by the theory but usually unaffected in practice")
    if cfg.max_ndof is None and cfg.max_levels is None:
        warnings.append("only a tolerance stop is set; the run may be long "
                        "if the tolerance is never reached")
    return q_est, warnings


@dataclass(frozen=True)
class LevelRecord:
    level: int
    active_goal: int          # 1-based position after sorting, 0 if none
    n_elements: int
    ndof: int
    cumndof: int
    eta: float
    zeta: tuple[float, ...]   # last computed estimator value per goal
    delta: float
    marking: str              # initial | regular | irregular
    n_mark_u: int
    n_mark_z: int
    n_mark_uz: int
    n_mark: int
    solves_primal: int
    solves_dual: int
    goal_values: tuple[float, ...]


@dataclass
class History:
    config: AdaptiveConfig
    mode: str
    records: list[LevelRecord] = field(default_factory=list)
    goal_order: tuple[int, ...] = ()
    q_est: float = 0.0
    warnings: list[str] = field(default_factory=list)
    monitor_solves: int = 0
    meshes: list[Mesh] | None = None
    parent_maps: list[np.ndarray] | None = None
    final_mesh: Mesh | None = None

    @property
    def n_goals_total(self) -> int:
        return len(self.records[0].zeta) if self.records else 0


def run(cfg: AdaptiveConfig, problem: ProblemData, mesh0: Mesh, *,
        mode: str = MODE_NGO, keep_lineage: bool = False,
        progress=None) -> History:
    """Run the adaptive loop until a stopping criterion fires.

    mode "ngo" cycles through cfg.n_goals goals (goals beyond that, if any,
    are monitored: solved and estimated for reporting but never marked on).
    mode "afem_only" marks on the primal estimator alone and monitors all
    goals.
    """
    q_est, warnings = validate_params(cfg)
    n_total = problem.n_goals
    if mode == MODE_NGO:
        n_cycle = cfg.n_goals
        if not 1 <= n_cycle <= n_total:
            raise ParameterError(
                f"n_goals = {n_cycle} outside 1..{n_total} goals of the problem")
    elif mode == MODE_AFEM_ONLY:
        n_cycle = 0
    else:
        raise ParameterError(f"unknown run mode {mode!r}")

    perm = list(range(n_total))
    hist = History(config=cfg, mode=mode, goal_order=tuple(perm),
                   q_est=q_est, warnings=list(warnings))
    if keep_lineage:
        hist.meshes = []
        hist.parent_maps = []

    active = ActiveHistory(max(n_cycle, 1))
    zeta_last = [0.0] * n_total
    mesh = mesh0
    cumndof = 0

    for level in range(_SAFETY_MAX_LEVELS):
        space = build_space(mesh, cfg.degree)
        solver = GalerkinSolver(space, problem)
        u = solver.solve_primal()
        solves_primal = 1
        ind_u = residual_indicators(space, u, problem, goal=None,
                                    include_neumann=cfg.neumann_residual,
                                    level=level, coefficients=solver.coefficients)
        m_u = doerfler_min(ind_u, cfg.theta)

        solves_dual = 0
        ind_z: IndicatorField | None = None
        active_pos = 0
        if n_cycle >= 1:
            if level == 0 and cfg.initial_sort and n_cycle >= 2:
                duals = [solver.solve_dual(g) for g in range(n_cycle)]
                inds = [residual_indicators(space, z, problem, goal=g,
                                            include_neumann=cfg.neumann_residual,
                                            level=level,
                                            coefficients=solver.coefficients)
                        for g, z in enumerate(duals)]
                solves_dual = n_cycle
                zetas = np.array([ind.estimator for ind in inds])
                order = np.argsort(-zetas, kind="stable")
                perm[:n_cycle] = [int(g) for g in order]
                hist.goal_order = tuple(perm)
                sorted_zetas = [float(zetas[g]) for g in order]
                active.buffer = sorted_zetas[1:]
                for pos in range(n_cycle):
                    zeta_last[pos] = sorted_zetas[pos]
                active_pos = 0
                ind_z = inds[perm[0]]
            else:
                active_pos = level % n_cycle
                z = solver.solve_dual(perm[active_pos])
                solves_dual = 1
                ind_z = residual_indicators(space, z, problem, goal=perm[active_pos],
                                            include_neumann=cfg.neumann_residual,
                                            level=level,
                                            coefficients=solver.coefficients)
                zeta_last[active_pos] = ind_z.estimator

        for pos in range(n_cycle, n_total):
            zm = solver.solve_dual(perm[pos])
            hist.monitor_solves += 1
            ind_m = residual_indicators(space, zm, problem, goal=perm[pos],
                                        include_neumann=cfg.neumann_residual,
                                        level=level,
                                        coefficients=solver.coefficients)
            zeta_last[pos] = ind_m.estimator

        if mode == MODE_AFEM_ONLY:
            m_z = np.empty(0, dtype=np.int64)
            m_uz = np.empty(0, dtype=np.int64)
            m_final = m_u
            kind = INITIAL if level == 0 else REGULAR
        else:
            zeta_now = ind_z.estimator
            m_z = doerfler_min(ind_z, cfg.theta)
            m_uz = combine_marks(m_u, m_z, ind_u, ind_z, cfg.c_mark)
            if level == 0:
                kind = INITIAL
                m_final = m_uz
            else:
                kind = decide_marking(zeta_now, active, cfg.rho_irr)
                if kind == REGULAR:
                    m_final = m_uz
                else:
                    m_final = irregular_select(m_uz, active.prev_mark_count,
                                               cfg.irregular_variant, ind_u, ind_z)
                decision = MarkDecision(kind, m_final, len(m_u), len(m_z),
                                        len(m_uz))
                decision.check_cap(active.prev_mark_count)
            active.push(zeta_now, len(m_final))

        ndof = space.n_free
        cumndof += ndof
        eta = ind_u.estimator
        delta = eta * float(sum(zeta_last))
        goal_values = tuple(evaluate_functionals(
            space, solver.coefficients, u, [perm[pos] for pos in range(n_total)]))
        record = LevelRecord(
            level=level,
            active_goal=active_pos + 1 if n_cycle >= 1 else 0,
            n_elements=mesh.n_elements,
            ndof=ndof,
            cumndof=cumndof,
            eta=eta,
            zeta=tuple(zeta_last),
            delta=delta,
            marking=kind,
            n_mark_u=len(m_u),
            n_mark_z=len(m_z),
            n_mark_uz=len(m_uz),
            n_mark=len(m_final),
            solves_primal=solves_primal,
            solves_dual=solves_dual,
            goal_values=goal_values,
        )
        hist.records.append(record)
        if keep_lineage:
            hist.meshes.append(mesh)
        if progress is not None:
            progress(record)

        if cfg.max_levels is not None and level + 1 >= cfg.max_levels:
            break
        if cfg.max_ndof is not None and ndof >= cfg.max_ndof:
            break
        if cfg.estimator_tol is not None and delta <= cfg.estimator_tol:
            break

        mesh, parent = refine_nvb(mesh, m_final)
        if keep_lineage:
            hist.parent_maps.append(parent)
    else:
        raise RuntimeError(f"no stopping criterion fired within "
                           f"{_SAFETY_MAX_LEVELS} levels")

    hist.final_mesh = mesh
    return hist


def fit_loglog(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def select_window(x: np.ndarray, window) -> np.ndarray:
    """Boolean mask for a fit window over the x values.

    "decade" keeps points with x >= max(x)/10; "last:k" keeps the last k
    points; a (start, stop) pair keeps that index slice.
    """
    x = np.asarray(x, dtype=float)
    mask = np.zeros(x.size, dtype=bool)
    if isinstance(window, str):
        if window == "decade":
            mask[x >= x.max() / 10.0] = True
            return mask
        if window.startswith("last:"):
            k = int(window.split(":", 1)[1])
            if k < 1:
                raise ValueError(f"window {window!r} must keep at least one point")
            mask[max(x.size - k, 0):] = True
            return mask
        raise ValueError(f"unknown window spec {window!r}")
    start, stop = window
    mask[start:stop] = True
    return mask


def rate_fit(history: History, quantity: str, window="decade",
             x_axis: str = "ndof") -> float:
    """Fitted convergence slope of a recorded quantity.

    quantity is "delta", "eta", "zeta_<i>", or "goal_error_<i>" (1-based i).
    For a cycled goal only the levels where it was active enter the fit;
    goals that were never active (monitored ones) use every level. Goal
    errors are taken against the final level's value, which is dropped.
    """
    records = history.records
    if quantity == "delta":
        pairs = [(r, r.delta) for r in records]
    elif quantity == "eta":
        pairs = [(r, r.eta) for r in records]
    elif quantity.startswith("zeta_"):
        i = int(quantity.split("_", 1)[1])
        active_records = [r for r in records if r.active_goal == i]
        chosen = active_records if active_records else records
        pairs = [(r, r.zeta[i - 1]) for r in chosen]
    elif quantity.startswith("goal_error_"):
        i = int(quantity.split("goal_error_", 1)[1])
        reference = records[-1].goal_values[i - 1]
        pairs = [(r, abs(r.goal_values[i - 1] - reference)) for r in records[:-1]]
    else:
        raise ValueError(f"unknown quantity {quantity!r}")

    pairs = [(r, y) for r, y in pairs if y > 0.0 and getattr(r, x_axis) > 0]
    if not pairs:
        raise ValueError(f"no positive values of {quantity} to fit")
    x = np.array([getattr(r, x_axis) for r, _ in pairs], dtype=float)
    y = np.array([y for _, y in pairs], dtype=float)
    mask = select_window(x, window)
    if np.count_nonzero(mask) < 3:
        raise ValueError(f"window too small: {np.count_nonzero(mask)} points "
                         f"for {quantity}, need at least 3")
    return fit_loglog(x[mask], y[mask])


def tail_ratio(history: History) -> np.ndarray:
    """Per-level ratio sum_{k >= l} delta_k^2 / delta_l^2 (a convergence monitor)."""
    delta = np.array([r.delta for r in history.records], dtype=float)
    suffix = np.cumsum(delta[::-1] ** 2)[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = suffix / delta ** 2
    return ratio
