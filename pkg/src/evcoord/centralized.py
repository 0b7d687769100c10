"""Full-horizon optimal control problems for the transformer-coupled fleet.

Assembles the residential and hub PWL quadratic programs, exposes the
per-timestep coupling duals with the congestion-positive sign
convention (lambda(k) = marginal optimal cost of one extra kA of
background demand at step k), and solves the epigraph (SOCP-style)
variant by tangent cutting planes for the tightness certifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .models import EvParams, HubSpec, HubTrajectories, TransformerParams
from .relaxations import OcpTrajectories, PwlScheme, pwl_build
from .solver import QpWorkspace, QuadraticProgram, Solution, SolverOptions, solve_qp

__all__ = [
    "KA_PER_A",
    "QosInfeasibleError",
    "ResidentialOcp",
    "HubOcp",
    "build_residential_ocp",
    "update_residential_ocp",
    "build_hub_ocp",
    "update_hub_ocp",
    "extract_coupling_duals",
    "residential_trajectories",
    "hub_arrays",
    "solve_residential_socp",
    "evaluate_residential_objective",
    "evaluate_hub_objective",
]

KA_PER_A = 1e-3  # EV/hub charger currents are in A, transformer side in kA


class QosInfeasibleError(ValueError):
    """Required energy cannot be delivered by the deadline; lists offenders."""

    def __init__(self, offenders):
        self.offenders = offenders
        lines = ", ".join(
            f"{aid}: needs {need:.4f}, achievable {ach:.4f}" for aid, need, ach in offenders
        )
        super().__init__(f"QoS infeasible for: {lines}")


@dataclass
class ResidentialOcp:
    qp: QuadraticProgram
    pwl: PwlScheme
    n_ev: int
    horizon: int
    idx_i: np.ndarray  # (N, K)
    idx_s: np.ndarray  # (N, K), s_n(k+1)
    idx_pw: np.ndarray  # (M, K)
    idx_t: np.ndarray  # (K,), T(k+1)
    rows_coupling: np.ndarray
    params: TransformerParams
    evs: list
    eps_aug: float
    t_meas: float = 0.0
    s_meas: np.ndarray = None


@dataclass
class HubOcp:
    qp: QuadraticProgram
    pwl: PwlScheme
    n_hub: int
    horizon: int
    idx_i: np.ndarray
    idx_e: np.ndarray  # E_h(k+1)
    idx_ed: np.ndarray  # E_delta
    idx_pw: np.ndarray
    idx_t: np.ndarray
    rows_coupling: np.ndarray
    params: TransformerParams
    hubs: list
    trajs: list
    eps_aug: float
    t_meas: float = 0.0
    e_meas: np.ndarray = None


def _check_residential_qos(evs, s_meas, t0, horizon):
    offenders = []
    for n, ev in enumerate(evs):
        d = ev.k_bar - t0
        if d > horizon:
            continue  # deadline not yet inside the window
        steps = max(d, 1)  # a passed deadline binds the first in-window state
        achievable = s_meas[n] + ev.eta * ev.i_max * steps
        if achievable < ev.s_bar - 1e-9:
            offenders.append((ev.ev_id or f"ev{n}", ev.s_bar - s_meas[n], achievable - s_meas[n]))
    if offenders:
        raise QosInfeasibleError(offenders)


def _shat_bounds(ev: EvParams, t0: int, horizon: int) -> np.ndarray:
    # lower SoC bound for s(t0+k+1), k = 0..horizon-1
    t_abs = t0 + 1 + np.arange(horizon)
    return np.where(t_abs >= ev.k_bar, ev.s_bar, 0.0)


def _segment_ridge(h_diag: np.ndarray) -> float:
    return 1e-7 * max(1.0, float(h_diag.max(initial=0.0)))


def build_residential_ocp(
    p: TransformerParams,
    evs: list,
    s_meas: np.ndarray,
    t_meas: float,
    i_d: np.ndarray,
    ta: np.ndarray,
    t0: int = 0,
    eps_aug: float = 0.0,
) -> ResidentialOcp:
    """Assemble the residential PWL QP over horizon len(i_d).

    Variables are stacked [i (A), s, i_pw (kA), T]; the coupling rows
    read sum_m i_pw_m(k) - 1e-3 * sum_n i_n(k) = i_d(k), exactly once
    per timestep.
    """
    n_ev = len(evs)
    horizon = len(i_d)
    if len(ta) != horizon:
        raise ValueError("ambient and background slices must have equal length")
    s_meas = np.asarray(s_meas, float)
    _check_residential_qos(evs, s_meas, t0, horizon)
    pwl = pwl_build(p.i_cap, p.n_segments)
    m_seg = p.n_segments
    nk = n_ev * horizon
    idx_i = np.arange(nk).reshape(n_ev, horizon)
    idx_s = nk + np.arange(nk).reshape(n_ev, horizon)
    idx_pw = 2 * nk + np.arange(m_seg * horizon).reshape(m_seg, horizon)
    idx_t = 2 * nk + m_seg * horizon + np.arange(horizon)
    n_var = 2 * nk + (m_seg + 1) * horizon

    rows, cols, vals = [], [], []
    b_eq = np.zeros(nk + 2 * horizon)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    r = 0
    for n, ev in enumerate(evs):
        for k in range(horizon):
            put(r, idx_s[n, k], 1.0)
            if k > 0:
                put(r, idx_s[n, k - 1], -1.0)
            put(r, idx_i[n, k], -ev.eta)
            b_eq[r] = s_meas[n] if k == 0 else 0.0
            r += 1
    for k in range(horizon):
        put(r, idx_t[k], 1.0)
        if k > 0:
            put(r, idx_t[k - 1], -p.tau)
        for m in range(m_seg):
            put(r, idx_pw[m, k], -p.gamma * pwl.slopes[m])
        b_eq[r] = p.rho * ta[k] + (p.tau * t_meas if k == 0 else 0.0)
        r += 1
    rows_coupling = np.arange(r, r + horizon)
    for k in range(horizon):
        for m in range(m_seg):
            put(r, idx_pw[m, k], 1.0)
        for n in range(n_ev):
            put(r, idx_i[n, k], -KA_PER_A)
        b_eq[r] = i_d[k]
        r += 1

    a_eq = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_var))

    h_diag = np.zeros(n_var)
    g = np.zeros(n_var)
    lo = np.full(n_var, -np.inf)
    hi = np.full(n_var, np.inf)
    for n, ev in enumerate(evs):
        h_diag[idx_i[n]] = 2.0 * ev.r
        h_diag[idx_s[n]] = 2.0 * ev.q
        g[idx_s[n]] = -2.0 * ev.q
        lo[idx_i[n]] = 0.0
        hi[idx_i[n]] = ev.i_max
        lo[idx_s[n]] = _shat_bounds(ev, t0, horizon)
        hi[idx_s[n]] = 1.0
    # the segment split is otherwise a free LP direction; a ridge far below
    # every physical curvature keeps the QP strictly convex and its duals
    # well defined without moving the optimum beyond solver tolerance
    h_diag[idx_pw] = _segment_ridge(h_diag)
    lo[idx_pw] = 0.0
    hi[idx_pw] = pwl.delta_i
    hi[idx_t] = p.t_max
    g[idx_t] += eps_aug

    qp = QuadraticProgram(
        h=sp.diags(h_diag, format="csc"), g=g, a_eq=a_eq, b_eq=b_eq, lo=lo, hi=hi
    )
    return ResidentialOcp(
        qp=qp,
        pwl=pwl,
        n_ev=n_ev,
        horizon=horizon,
        idx_i=idx_i,
        idx_s=idx_s,
        idx_pw=idx_pw,
        idx_t=idx_t,
        rows_coupling=rows_coupling,
        params=p,
        evs=list(evs),
        eps_aug=eps_aug,
        t_meas=t_meas,
        s_meas=s_meas,
    )


def update_residential_ocp(ocp: ResidentialOcp, s_meas, t_meas, i_d, ta, t0):
    """Refresh the vectors of an assembled OCP for a new MPC window of the
    same length.  Matrices are untouched, so a cached factorization stays
    valid."""
    if len(i_d) != ocp.horizon:
        raise ValueError("window length changed; rebuild the OCP")
    s_meas = np.asarray(s_meas, float)
    _check_residential_qos(ocp.evs, s_meas, t0, ocp.horizon)
    p = ocp.params
    qp = ocp.qp
    n_ev, horizon = ocp.n_ev, ocp.horizon
    for n in range(n_ev):
        base = n * horizon
        qp.b_eq[base] = s_meas[n]
        qp.b_eq[base + 1 : base + horizon] = 0.0
    trow = n_ev * horizon
    qp.b_eq[trow : trow + horizon] = p.rho * np.asarray(ta, float)
    qp.b_eq[trow] += p.tau * t_meas
    qp.b_eq[ocp.rows_coupling] = np.asarray(i_d, float)
    for n, ev in enumerate(ocp.evs):
        qp.lo[ocp.idx_s[n]] = _shat_bounds(ev, t0, horizon)
    ocp.t_meas = t_meas
    ocp.s_meas = s_meas
    return ocp


def extract_coupling_duals(ocp, sol: Solution) -> np.ndarray:
    """Per-timestep coupling multipliers, positive under congestion.

    Sign convention: lambda(k) equals the sensitivity of the optimal
    objective to the background demand i_d(k), so a loaded transformer
    prices additional demand positively.
    """
    if sol.status != "optimal":
        raise ValueError(f"duals require an optimal solution, got status={sol.status}")
    return -sol.lam_eq[ocp.rows_coupling]


def residential_trajectories(ocp: ResidentialOcp, sol: Solution) -> OcpTrajectories:
    x = sol.x
    pw = x[ocp.idx_pw]
    e = ocp.pwl.slopes @ pw
    i_total = pw.sum(axis=0)
    temp = np.concatenate([[ocp.t_meas], x[ocp.idx_t]])
    i = x[ocp.idx_i]
    soc = np.concatenate([ocp.s_meas[:, None], x[ocp.idx_s]], axis=1)
    return OcpTrajectories(e=e, i_total=i_total, temp=temp, i=i, soc=soc)


def evaluate_residential_objective(evs, i: np.ndarray, soc: np.ndarray) -> float:
    """True fleet objective from trajectories: sum q(s(k+1)-1)^2 + r i(k)^2."""
    total = 0.0
    for n, ev in enumerate(evs):
        total += ev.q * float(((soc[n, 1:] - 1.0) ** 2).sum())
        total += ev.r * float((i[n] ** 2).sum())
    return total


# ---------------------------------------------------------------------------
# Hub OCP
# ---------------------------------------------------------------------------


def _check_hub_feasibility(hubs, trajs, e_meas, t0, horizon):
    offenders = []
    for h, (hub, traj) in enumerate(zip(hubs, trajs)):
        e = e_meas[h]
        worst = 0.0
        for k in range(horizon):
            ka = t0 + k
            cap = traj.e_max[ka] if ka < len(traj) else 0.0
            e = min(
                e + hub.eta_h * traj.i_max[ka] + traj.e_arrive[ka] - traj.e_depart[ka],
                cap,
            )
            worst = min(worst, e)
            e = max(e, 0.0)
        if worst < -1e-6:
            offenders.append((hub.hub_id or f"hub{h}", -worst, 0.0))
    if offenders:
        raise QosInfeasibleError(offenders)


def build_hub_ocp(
    p: TransformerParams,
    hubs: list,
    trajs: list,
    e_meas: np.ndarray,
    t_meas: float,
    i_d: np.ndarray,
    ta: np.ndarray,
    t0: int = 0,
    eps_aug: float = 0.0,
) -> HubOcp:
    """Assemble the aggregated-hub PWL QP over horizon len(i_d).

    Hub currents are in A with the same 1e-3 coupling conversion;
    energies in kWh against time-varying parked-capacity envelopes.
    """
    n_hub = len(hubs)
    horizon = len(i_d)
    e_meas = np.asarray(e_meas, float)
    _check_hub_feasibility(hubs, trajs, e_meas, t0, horizon)
    pwl = pwl_build(p.i_cap, p.n_segments)
    m_seg = p.n_segments
    hk = n_hub * horizon
    idx_i = np.arange(hk).reshape(n_hub, horizon)
    idx_e = hk + np.arange(hk).reshape(n_hub, horizon)
    idx_ed = 2 * hk + np.arange(hk).reshape(n_hub, horizon)
    idx_pw = 3 * hk + np.arange(m_seg * horizon).reshape(m_seg, horizon)
    idx_t = 3 * hk + m_seg * horizon + np.arange(horizon)
    n_var = 3 * hk + (m_seg + 1) * horizon

    rows, cols, vals = [], [], []
    b_eq = np.zeros(hk + 2 * horizon)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    r = 0
    for h, hub in enumerate(hubs):
        traj = trajs[h]
        for k in range(horizon):
            ka = t0 + k
            put(r, idx_e[h, k], 1.0)
            if k > 0:
                put(r, idx_e[h, k - 1], -1.0)
            put(r, idx_i[h, k], -hub.eta_h)
            put(r, idx_ed[h, k], 1.0)
            b_eq[r] = traj.e_arrive[ka] - traj.e_depart[ka] + (e_meas[h] if k == 0 else 0.0)
            r += 1
    for k in range(horizon):
        put(r, idx_t[k], 1.0)
        if k > 0:
            put(r, idx_t[k - 1], -p.tau)
        for m in range(m_seg):
            put(r, idx_pw[m, k], -p.gamma * pwl.slopes[m])
        b_eq[r] = p.rho * ta[k] + (p.tau * t_meas if k == 0 else 0.0)
        r += 1
    rows_coupling = np.arange(r, r + horizon)
    for k in range(horizon):
        for m in range(m_seg):
            put(r, idx_pw[m, k], 1.0)
        for h in range(n_hub):
            put(r, idx_i[h, k], -KA_PER_A)
        b_eq[r] = i_d[k]
        r += 1

    a_eq = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_var))
    h_diag = np.zeros(n_var)
    g = np.zeros(n_var)
    lo = np.full(n_var, -np.inf)
    hi = np.full(n_var, np.inf)
    ks = t0 + np.arange(horizon)
    for h, hub in enumerate(hubs):
        traj = trajs[h]
        h_diag[idx_i[h]] = 2.0 * hub.r_h
        h_diag[idx_e[h]] = 2.0 * hub.q_h
        g[idx_e[h]] = -2.0 * hub.q_h * traj.e_max[ks]
        g[idx_ed[h]] = -hub.o_h
        lo[idx_i[h]] = 0.0
        hi[idx_i[h]] = traj.i_max[ks]
        lo[idx_e[h]] = 0.0
        hi[idx_e[h]] = traj.e_max[ks]
        lo[idx_ed[h]] = 0.0
        hi[idx_ed[h]] = traj.e_delta_max[ks]
    h_diag[idx_pw] = _segment_ridge(h_diag)
    lo[idx_pw] = 0.0
    hi[idx_pw] = pwl.delta_i
    hi[idx_t] = p.t_max
    g[idx_t] += eps_aug

    qp = QuadraticProgram(
        h=sp.diags(h_diag, format="csc"), g=g, a_eq=a_eq, b_eq=b_eq, lo=lo, hi=hi
    )
    return HubOcp(
        qp=qp,
        pwl=pwl,
        n_hub=n_hub,
        horizon=horizon,
        idx_i=idx_i,
        idx_e=idx_e,
        idx_ed=idx_ed,
        idx_pw=idx_pw,
        idx_t=idx_t,
        rows_coupling=rows_coupling,
        params=p,
        hubs=list(hubs),
        trajs=list(trajs),
        eps_aug=eps_aug,
        t_meas=t_meas,
        e_meas=e_meas,
    )


def update_hub_ocp(ocp: HubOcp, e_meas, t_meas, i_d, ta, t0):
    if len(i_d) != ocp.horizon:
        raise ValueError("window length changed; rebuild the OCP")
    e_meas = np.asarray(e_meas, float)
    _check_hub_feasibility(ocp.hubs, ocp.trajs, e_meas, t0, ocp.horizon)
    p = ocp.params
    qp = ocp.qp
    horizon = ocp.horizon
    ks = t0 + np.arange(horizon)
    for h, hub in enumerate(ocp.hubs):
        traj = ocp.trajs[h]
        base = h * horizon
        qp.b_eq[base : base + horizon] = traj.e_arrive[ks] - traj.e_depart[ks]
        qp.b_eq[base] += e_meas[h]
        qp.g[ocp.idx_e[h]] = -2.0 * hub.q_h * traj.e_max[ks]
        qp.hi[ocp.idx_i[h]] = traj.i_max[ks]
        qp.hi[ocp.idx_e[h]] = traj.e_max[ks]
        qp.hi[ocp.idx_ed[h]] = traj.e_delta_max[ks]
    trow = ocp.n_hub * horizon
    qp.b_eq[trow : trow + horizon] = p.rho * np.asarray(ta, float)
    qp.b_eq[trow] += p.tau * t_meas
    qp.b_eq[ocp.rows_coupling] = np.asarray(i_d, float)
    ocp.t_meas = t_meas
    ocp.e_meas = e_meas
    return ocp


def hub_arrays(ocp: HubOcp, sol: Solution):
    """(i_h, E(k+1), E_delta, i_total, temp) arrays from a hub solution."""
    x = sol.x
    pw = x[ocp.idx_pw]
    i_total = pw.sum(axis=0)
    temp = np.concatenate([[ocp.t_meas], x[ocp.idx_t]])
    return x[ocp.idx_i], x[ocp.idx_e], x[ocp.idx_ed], i_total, temp


def evaluate_hub_objective(hubs, trajs, t0, i_h, e_h, ed) -> float:
    total = 0.0
    horizon = i_h.shape[1]
    ks = t0 + np.arange(horizon)
    for h, hub in enumerate(hubs):
        target = trajs[h].e_max[ks]
        total += hub.q_h * float(((e_h[h] - target) ** 2).sum())
        total += hub.r_h * float((i_h[h] ** 2).sum())
        total -= hub.o_h * float(ed[h].sum())
    return total


# ---------------------------------------------------------------------------
# Epigraph (SOCP-style) solve by tangent cutting planes, for the certifier
# ---------------------------------------------------------------------------


@dataclass
class SocpResult:
    traj: OcpTrajectories
    lam: np.ndarray  # coupling duals, congestion-positive
    mu_e: np.ndarray  # per-step epigraph multipliers
    mu_t: np.ndarray  # per-step temperature-cap multipliers
    objective: float
    rounds: int


def solve_residential_socp(
    p: TransformerParams,
    evs: list,
    s_meas: np.ndarray,
    t_meas: float,
    i_d: np.ndarray,
    ta: np.ndarray,
    t0: int = 0,
    eps_aug: float = 0.0,
    cut_tol: float = 1e-8,
    max_rounds: int = 60,
    solver_opts: SolverOptions | None = None,
) -> SocpResult:
    """Solve the epigraph relaxation e(k) >= i_total(k)^2 exactly (to
    cut_tol) by iteratively adding tangent half-spaces of the parabola.

    The epigraph of x^2 is the intersection of its tangents, so the loop
    converges to the SOCP solution; per-step multipliers of the active
    tangents sum to the epigraph multiplier mu_e(k).
    """
    n_ev = len(evs)
    horizon = len(i_d)
    s_meas = np.asarray(s_meas, float)
    _check_residential_qos(evs, s_meas, t0, horizon)
    nk = n_ev * horizon
    idx_i = np.arange(nk).reshape(n_ev, horizon)
    idx_s = nk + np.arange(nk).reshape(n_ev, horizon)
    idx_e = 2 * nk + np.arange(horizon)
    idx_it = 2 * nk + horizon + np.arange(horizon)
    idx_t = 2 * nk + 2 * horizon + np.arange(horizon)
    n_var = 2 * nk + 3 * horizon

    rows, cols, vals = [], [], []
    b_eq = np.zeros(nk + 2 * horizon)
    r = 0
    for n, ev in enumerate(evs):
        for k in range(horizon):
            rows += [r, r] if k == 0 else [r, r, r]
            if k == 0:
                cols += [idx_s[n, k], idx_i[n, k]]
                vals += [1.0, -ev.eta]
                b_eq[r] = s_meas[n]
            else:
                cols += [idx_s[n, k], idx_s[n, k - 1], idx_i[n, k]]
                vals += [1.0, -1.0, -ev.eta]
            r += 1
    for k in range(horizon):
        rows.append(r)
        cols.append(idx_t[k])
        vals.append(1.0)
        if k > 0:
            rows.append(r)
            cols.append(idx_t[k - 1])
            vals.append(-p.tau)
        rows.append(r)
        cols.append(idx_e[k])
        vals.append(-p.gamma)
        b_eq[r] = p.rho * ta[k] + (p.tau * t_meas if k == 0 else 0.0)
        r += 1
    rows_coupling = np.arange(r, r + horizon)
    for k in range(horizon):
        rows.append(r)
        cols.append(idx_it[k])
        vals.append(1.0)
        for n in range(n_ev):
            rows.append(r)
            cols.append(idx_i[n, k])
            vals.append(-KA_PER_A)
        b_eq[r] = i_d[k]
        r += 1
    a_eq = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_var))

    h_diag = np.zeros(n_var)
    g = np.zeros(n_var)
    lo = np.full(n_var, -np.inf)
    hi = np.full(n_var, np.inf)
    for n, ev in enumerate(evs):
        h_diag[idx_i[n]] = 2.0 * ev.r
        h_diag[idx_s[n]] = 2.0 * ev.q
        g[idx_s[n]] = -2.0 * ev.q
        lo[idx_i[n]] = 0.0
        hi[idx_i[n]] = ev.i_max
        lo[idx_s[n]] = _shat_bounds(ev, t0, horizon)
        hi[idx_s[n]] = 1.0
    # e is a free direction wherever the cap chain is slack; same ridge logic
    h_diag[idx_e] = _segment_ridge(h_diag)
    lo[idx_e] = 0.0
    hi[idx_e] = p.i_cap**2
    lo[idx_it] = 0.0
    hi[idx_it] = p.i_cap
    hi[idx_t] = p.t_max
    g[idx_t] += eps_aug

    opts = solver_opts or SolverOptions(eps_abs=1e-8, eps_rel=1e-8, method="ipm")
    # tangent cut at point c, step k:  2 c * it_k - e_k <= c^2
    cut_points = [list(p.i_cap * np.array([0.25, 0.5, 0.75, 1.0])) for _ in range(horizon)]
    sol = None
    for rounds in range(1, max_rounds + 1):
        ci, cr, cv, cb = [], [], [], []
        row = 0
        cut_rows = []  # (k, row range) bookkeeping
        for k in range(horizon):
            start = row
            for c in cut_points[k]:
                ci.append(row)
                cr.append(idx_it[k])
                cv.append(2.0 * c)
                ci.append(row)
                cr.append(idx_e[k])
                cv.append(-1.0)
                cb.append(c * c)
                row += 1
            cut_rows.append((start, row))
        a_in = sp.csc_matrix((cv, (ci, cr)), shape=(row, n_var))
        qp = QuadraticProgram(
            h=sp.diags(h_diag, format="csc"),
            g=g,
            a_eq=a_eq,
            b_eq=b_eq,
            a_in=a_in,
            b_in=np.array(cb),
            lo=lo,
            hi=hi,
        )
        sol = solve_qp(qp, opts)
        if sol.status != "optimal":
            raise RuntimeError(f"epigraph solve failed with status {sol.status}")
        it_v = sol.x[idx_it]
        e_v = sol.x[idx_e]
        viol = it_v**2 - e_v
        added = False
        for k in range(horizon):
            # a duplicate tangent cannot reduce the remaining violation
            # (bounded by the squared spacing to the nearest cut)
            if viol[k] > cut_tol and min(
                abs(c - it_v[k]) for c in cut_points[k]
            ) > 1e-6 * p.i_cap:
                cut_points[k].append(float(it_v[k]))
                added = True
        if not added:
            mu_e = np.zeros(horizon)
            for k, (a, b) in enumerate(cut_rows):
                mu_e[k] = sol.mu_in[a:b].sum()
            mu_t = sol.mu_hi[idx_t]
            temp = np.concatenate([[t_meas], sol.x[idx_t]])
            soc = np.concatenate([s_meas[:, None], sol.x[idx_s]], axis=1)
            traj = OcpTrajectories(e=e_v, i_total=it_v, temp=temp, i=sol.x[idx_i], soc=soc)
            lam = -sol.lam_eq[rows_coupling]
            return SocpResult(
                traj=traj,
                lam=lam,
                mu_e=mu_e,
                mu_t=mu_t,
                objective=sol.objective,
                rounds=rounds,
            )
    raise RuntimeError(f"cutting-plane loop did not converge in {max_rounds} rounds")
