"""Local subproblem solvers for the distributed schemes.

Each EV agent's window problem has a special shape: a diagonal effort
term plus a SoC-tracking term through the cumulative-sum map, box bounds
on the current, and at most two scalar cumulative constraints (the QoS
floor at the deadline and the battery ceiling, both consequences of the
SoC chain being nondecreasing under nonnegative current).  That makes an
exact primal active-set solve O(K) per iteration: on any free index set
the reduced Hessian is congruent to a tridiagonal matrix through the
cumulative reparameterization.

The transformer and hub agents are ordinary small QPs solved through a
cached operator-splitting workspace with interior-point rescue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solveh_banded

from .centralized import KA_PER_A, _shat_bounds
from .models import EvParams, TransformerParams
from .relaxations import pwl_build
from .solver import QpWorkspace, QuadraticProgram, SolverOptions, solve_qp_ipm

__all__ = ["EvAgent", "EvBlockResult", "TransformerAgent", "HubBlockAgent"]


@dataclass
class EvBlockResult:
    i: np.ndarray  # (K,) amperes
    soc: np.ndarray  # (K+1,) including the measured initial value
    mu_lo: np.ndarray
    mu_hi: np.ndarray
    nu_qos: float
    nu_cap: float
    objective: float


class _CumQp:
    """min 0.5 a0|u|^2 + 0.5 b0|Cu|^2 + c'u  s.t. 0<=u<=umax,
    sum(u[:t_q]) >= b_q (optional), sum(u) <= b_c.

    C is the running-sum map.  Exact primal active-set solve; every
    reduced system collapses to a tridiagonal solve in the cumulative
    variables.
    """

    def __init__(self, horizon: int, umax: float):
        self.h = horizon
        self.umax = umax
        self.u = np.zeros(horizon)
        self.at_lo = np.zeros(horizon, dtype=bool)
        self.at_hi = np.zeros(horizon, dtype=bool)
        self.qos_act = False
        self.cap_act = False

    # -- linear algebra ---------------------------------------------------

    def _reduced_solve(self, free_idx, a0, b0, rhs):
        """x = (a0 I + b0 M)^-1 rhs on the free subset, M = (C'C)_FF."""
        f = len(free_idx)
        gaps = np.diff(np.append(free_idx, self.h)).astype(float)
        diag = a0 * np.where(np.arange(f) < f - 1, 2.0, 1.0) + b0 * gaps
        rhs_y = rhs - np.append(rhs[1:], 0.0)  # difference-transpose
        if f == 1:
            y = rhs_y / diag
        else:
            ab = np.zeros((2, f))
            ab[0, 1:] = -a0
            ab[1] = diag
            y = solveh_banded(ab, rhs_y, lower=False)
        x = y.copy()
        x[1:] -= y[:-1]  # difference map back to u-space
        return x

    def _solve_working(self, a0, b0, c):
        """Equality-constrained solve on the current working set.

        Returns (u_target, nu_qos, nu_cap) ignoring inactive bounds.
        """
        h = self.h
        free = ~(self.at_lo | self.at_hi)
        fidx = np.flatnonzero(free)
        u = np.where(self.at_hi, self.umax, 0.0)
        nu_q = nu_c = 0.0
        if len(fidx) == 0:
            return u, nu_q, nu_c
        # rhs = -(c + D u_fixed) on free coordinates
        du_fixed = a0 * u + b0 * self._ctc(u)
        rhs0 = -(c + du_fixed)[fidx]
        u0 = self._reduced_solve(fidx, a0, b0, rhs0)
        cols = []
        if self.qos_act:
            aq = (fidx < self.t_q).astype(float)
            cols.append((aq, self.b_q - float(u[: self.t_q].sum())))
        if self.cap_act:
            cols.append((np.ones(len(fidx)), self.b_c - float(u.sum())))
        if cols:
            ws = [self._reduced_solve(fidx, a0, b0, a) for a, _ in cols]
            mat = np.array([[float(a @ w) for w in ws] for a, _ in cols])
            vec = np.array([t - float(a @ u0) for a, t in cols])
            try:
                nus = np.linalg.solve(mat, vec)
            except np.linalg.LinAlgError:
                nus = np.linalg.lstsq(mat, vec, rcond=None)[0]
            u_f = u0 + sum(n * w for n, w in zip(nus, ws))
            j = 0
            if self.qos_act:
                nu_q = float(nus[j])
                j += 1
            if self.cap_act:
                nu_c = -float(nus[j])  # cap enters stationarity with +nu_c
        else:
            u_f = u0
        u[fidx] = u_f
        return u, nu_q, nu_c

    def _ctc(self, u):
        # C'C u = reversed running sum of the running sum
        v = np.cumsum(u)
        return np.cumsum(v[::-1])[::-1]

    # -- main solve --------------------------------------------------------

    def solve(self, a0, b0, c, t_q, b_q, b_c, max_iter=None):
        h = self.h
        self.t_q = t_q
        self.b_q = b_q
        self.b_c = b_c
        umax = self.umax
        have_qos = t_q > 0 and b_q > 1e-15
        scale = max(umax, 1.0)
        ftol = 1e-11 * scale

        u = np.clip(self.u, 0.0, umax)
        total = u.sum()
        if total > b_c:
            u *= b_c / total
        if have_qos:
            deficit = b_q - u[:t_q].sum()
            j = 0
            while deficit > ftol and j < t_q:
                add = min(umax - u[j], deficit)
                u[j] += add
                deficit -= add
                j += 1
            excess = u.sum() - b_c
            j = h - 1
            while excess > ftol and j >= t_q:
                cut = min(u[j], excess)
                u[j] -= cut
                excess -= cut
                j -= 1
        self.at_lo &= u <= ftol
        self.at_hi &= u >= umax - ftol
        u[self.at_lo] = 0.0
        u[self.at_hi] = umax
        self.qos_act = self.qos_act and have_qos

        cap = max_iter if max_iter is not None else 6 * (h + 2)
        for _ in range(cap):
            u_t, nu_q, nu_c = self._solve_working(a0, b0, c)
            step = u_t - u
            if np.abs(step).max(initial=0.0) <= ftol:
                # optimal on the working set; check multiplier signs
                g = a0 * u + b0 * self._ctc(u) + c
                if self.qos_act:
                    g = g - nu_q * np.concatenate(
                        [np.ones(t_q), np.zeros(h - t_q)]
                    )
                if self.cap_act:
                    g = g + nu_c
                worst = None
                worst_v = 1e-9 * max(1.0, np.abs(g).max())
                for j in np.flatnonzero(self.at_lo):
                    if -g[j] > worst_v:
                        worst_v = -g[j]
                        worst = ("lo", j)
                for j in np.flatnonzero(self.at_hi):
                    if g[j] > worst_v:
                        worst_v = g[j]
                        worst = ("hi", j)
                if self.qos_act and -nu_q > worst_v:
                    worst_v = -nu_q
                    worst = ("qos", -1)
                if self.cap_act and -nu_c > worst_v:
                    worst_v = -nu_c
                    worst = ("cap", -1)
                if worst is None:
                    mu = a0 * u + b0 * self._ctc(u) + c
                    if self.qos_act:
                        mu = mu - nu_q * np.concatenate(
                            [np.ones(t_q), np.zeros(h - t_q)]
                        )
                    if self.cap_act:
                        mu = mu + nu_c
                    self.u = u
                    mu_lo = np.where(self.at_lo, np.maximum(mu, 0.0), 0.0)
                    mu_hi = np.where(self.at_hi, np.maximum(-mu, 0.0), 0.0)
                    return u, mu_lo, mu_hi, max(nu_q, 0.0), max(nu_c, 0.0)
                kind, j = worst
                if kind == "lo":
                    self.at_lo[j] = False
                elif kind == "hi":
                    self.at_hi[j] = False
                elif kind == "qos":
                    self.qos_act = False
                else:
                    self.cap_act = False
                continue
            # ratio test toward the working-set target
            t_max = 1.0
            block = None
            free = ~(self.at_lo | self.at_hi)
            for j in np.flatnonzero(free):
                if step[j] < -ftol:
                    t_j = (0.0 - u[j]) / step[j]
                    if t_j < t_max - 1e-12:
                        t_max, block = t_j, ("lo", j)
                elif step[j] > ftol:
                    t_j = (umax - u[j]) / step[j]
                    if t_j < t_max - 1e-12:
                        t_max, block = t_j, ("hi", j)
            if have_qos and not self.qos_act:
                d_q = step[:t_q].sum()
                if d_q < -ftol:
                    t_j = (b_q - u[:t_q].sum()) / d_q
                    if -1e-12 < t_j < t_max - 1e-12:
                        t_max, block = t_j, ("qos", -1)
            if not self.cap_act:
                d_c = step.sum()
                if d_c > ftol:
                    t_j = (b_c - u.sum()) / d_c
                    if -1e-12 < t_j < t_max - 1e-12:
                        t_max, block = t_j, ("cap", -1)
            u = u + max(t_max, 0.0) * step
            u = np.clip(u, 0.0, umax)
            if block is None:
                continue  # full step; next round hits the no-move branch
            kind, j = block
            if kind == "lo":
                self.at_lo[j] = True
                u[j] = 0.0
            elif kind == "hi":
                self.at_hi[j] = True
                u[j] = umax
            elif kind == "qos":
                self.qos_act = True
            else:
                self.cap_act = True
        return None  # did not settle; caller falls back to the generic solver


class EvAgent:
    """One EV's local window problem with warm-started active sets."""

    def __init__(self, ev: EvParams, horizon: int):
        self.ev = ev
        self.core = _CumQp(horizon, ev.i_max)
        self.horizon = horizon

    def solve(
        self,
        s_meas: float,
        t0: int,
        price: np.ndarray,
        prox_i: tuple[float, np.ndarray] | None = None,
        prox_s: tuple[float, np.ndarray] | None = None,
    ) -> EvBlockResult:
        """argmin J_n + price'(kA(i)) + proximal terms, s.t. local dynamics
        and bounds.  price is the coupling multiplier over the window.
        """
        ev = self.ev
        h = self.horizon
        di, zi = prox_i if prox_i is not None else (0.0, None)
        ds, zs = prox_s if prox_s is not None else (0.0, None)
        a0 = 2.0 * ev.r + di
        b0 = (2.0 * ev.q + ds) * ev.eta**2
        rev = np.arange(h, 0, -1, dtype=float)  # column sums of C
        c = KA_PER_A * np.asarray(price, float) + 2.0 * ev.q * ev.eta * (s_meas - 1.0) * rev
        if di > 0.0:
            c = c - di * zi
        if ds > 0.0:
            diff = s_meas - np.asarray(zs, float)
            c = c + ds * ev.eta * np.cumsum(diff[::-1])[::-1]
        # deadline index within the window; s nondecreasing folds the
        # whole shat staircase into one cumulative floor
        shat = _shat_bounds(ev, t0, h)
        t_q = 0
        b_q = 0.0
        active_rows = np.flatnonzero(shat > s_meas + 1e-12)
        if len(active_rows):
            t_q = int(active_rows[0]) + 1
            b_q = (ev.s_bar - s_meas) / ev.eta
        b_c = max((1.0 - s_meas), 0.0) / ev.eta
        got = self.core.solve(a0, b0, c, t_q, b_q, b_c)
        if got is None:
            got = self._fallback(a0, b0, c, t_q, b_q, b_c)
        u, mu_lo, mu_hi, nu_q, nu_c = got
        soc = s_meas + ev.eta * np.concatenate([[0.0], np.cumsum(u)])
        obj = ev.q * float(((soc[1:] - 1.0) ** 2).sum()) + ev.r * float((u**2).sum())
        return EvBlockResult(
            i=u, soc=soc, mu_lo=mu_lo, mu_hi=mu_hi, nu_qos=nu_q, nu_cap=nu_c, objective=obj
        )

    def _fallback(self, a0, b0, c, t_q, b_q, b_c):
        h = self.horizon
        cmat = np.tril(np.ones((h, h)))
        hmat = a0 * np.eye(h) + b0 * (cmat.T @ cmat)
        rows, rhs = [], []
        if t_q > 0 and b_q > 0:
            rows.append(-np.concatenate([np.ones(t_q), np.zeros(h - t_q)]))
            rhs.append(-b_q)
        rows.append(np.ones(h))
        rhs.append(b_c)
        qp = QuadraticProgram(
            h=sp.csc_matrix(hmat),
            g=c,
            a_in=sp.csc_matrix(np.array(rows)),
            b_in=np.array(rhs),
            lo=np.zeros(h),
            hi=np.full(h, self.core.umax),
        )
        sol = solve_qp_ipm(qp, eps=1e-10)
        nu_q = float(sol.mu_in[0]) if (t_q > 0 and b_q > 0) else 0.0
        nu_c = float(sol.mu_in[-1])
        self.core.u = sol.x.copy()
        return sol.x, sol.mu_lo, sol.mu_hi, nu_q, nu_c


class TransformerAgent:
    """Local transformer problem over (segment currents, aggregate, temps).

    Variables [i_pw (M,K), w (K), T (K)] with w(k) = sum_m i_pw_m(k);
    supports the price-only objective (dual ascent), the aggregate
    proximal objective (consensus ADMM), and the full proximal objective
    with temperature tracking (the inexact-Newton scheme's step 2).
    """

    def __init__(self, p: TransformerParams, horizon: int, ta: np.ndarray, t_meas: float):
        self.p = p
        self.h = horizon
        self.pwl = pwl_build(p.i_cap, p.n_segments)
        m_seg = p.n_segments
        self.idx_pw = np.arange(m_seg * horizon).reshape(m_seg, horizon)
        self.idx_w = m_seg * horizon + np.arange(horizon)
        self.idx_t = (m_seg + 1) * horizon + np.arange(horizon)
        n_var = (m_seg + 2) * horizon
        self.n_var = n_var
        rows, cols, vals = [], [], []
        b_eq = np.zeros(2 * horizon)
        r = 0
        for k in range(horizon):
            rows.append(r); cols.append(self.idx_t[k]); vals.append(1.0)
            if k > 0:
                rows.append(r); cols.append(self.idx_t[k - 1]); vals.append(-p.tau)
            for m in range(m_seg):
                rows.append(r); cols.append(self.idx_pw[m, k]); vals.append(-p.gamma * self.pwl.slopes[m])
            r += 1
        for k in range(horizon):
            rows.append(r); cols.append(self.idx_w[k]); vals.append(1.0)
            for m in range(m_seg):
                rows.append(r); cols.append(self.idx_pw[m, k]); vals.append(-1.0)
            r += 1
        a_eq = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_var))
        lo = np.full(n_var, -np.inf)
        hi = np.full(n_var, np.inf)
        lo[self.idx_pw] = 0.0
        hi[self.idx_pw] = self.pwl.delta_i
        lo[self.idx_w] = 0.0
        hi[self.idx_w] = p.i_cap
        hi[self.idx_t] = p.t_max
        ridge = 1e-7
        h_diag = np.full(n_var, ridge)
        self.qp = QuadraticProgram(
            h=sp.diags(h_diag, format="csc"),
            g=np.zeros(n_var),
            a_eq=a_eq,
            b_eq=b_eq,
            lo=lo,
            hi=hi,
        )
        self.set_window(ta, t_meas)
        self._warm = None
        self._base_h = h_diag
        self._ws = None
        self._ws_key = None

    def set_window(self, ta, t_meas):
        p = self.p
        self.qp.b_eq[: self.h] = p.rho * np.asarray(ta, float)
        self.qp.b_eq[0] += p.tau * t_meas
        self.t_meas = t_meas

    def solve(
        self,
        price: np.ndarray | None = None,
        prox_w: tuple[float, np.ndarray] | None = None,
        prox_pw: tuple[float, np.ndarray] | None = None,
        prox_t: tuple[float, np.ndarray] | None = None,
    ):
        """Returns (i_pw (M,K), w (K), temp (K+1,), mu_pw_lo, mu_pw_hi, mu_t)."""
        g = np.zeros(self.n_var)
        h_diag = self._base_h.copy()
        if price is not None:
            g[self.idx_w] -= np.asarray(price, float)
        for coef_center, idx in (
            (prox_w, self.idx_w),
            (prox_pw, self.idx_pw),
            (prox_t, self.idx_t),
        ):
            if coef_center is not None:
                coef, center = coef_center
                h_diag[idx] += coef
                g[idx] -= coef * np.asarray(center, float)
        qp = QuadraticProgram(
            h=sp.diags(h_diag, format="csc"),
            g=g,
            a_eq=self.qp.a_eq,
            b_eq=self.qp.b_eq,
            lo=self.qp.lo,
            hi=self.qp.hi,
        )
        # prox coefficients fix the Hessian; reuse the splitting workspace
        # (and its factorization) for the whole run of repeated prices
        key = tuple(np.round(h_diag[[self.idx_pw[0, 0], self.idx_w[0], self.idx_t[0]]], 12))
        if self._ws is None or key != self._ws_key:
            self._ws = QpWorkspace(
                qp,
                SolverOptions(
                    eps_abs=1e-7, eps_rel=1e-7, max_iter=2500,
                    polish_interval=800, validate=False, ipm_fallback=False,
                ),
            )
            self._ws_key = key
        sol = self._ws.solve(g=g, b_eq=qp.b_eq, lo=qp.lo, hi=qp.hi)
        if sol.status != "optimal":
            sol = solve_qp_ipm(qp, eps=1e-9, warm=self._warm)
            self._warm = sol
        if sol.status != "optimal":
            raise RuntimeError("transformer agent solve failed")
        x = sol.x
        temp = np.concatenate([[self.t_meas], x[self.idx_t]])
        return (
            x[self.idx_pw],
            x[self.idx_w],
            temp,
            sol.mu_lo[self.idx_pw],
            sol.mu_hi[self.idx_pw],
            sol.mu_hi[self.idx_t],
        )


class HubBlockAgent:
    """All hub agents' local problems batched into one block-diagonal QP."""

    def __init__(self, hubs, trajs, horizon: int, t0: int, e_meas: np.ndarray):
        self.hubs = hubs
        self.trajs = trajs
        self.h = horizon
        n_hub = len(hubs)
        hk = n_hub * horizon
        self.idx_i = np.arange(hk).reshape(n_hub, horizon)
        self.idx_e = hk + np.arange(hk).reshape(n_hub, horizon)
        self.idx_ed = 2 * hk + np.arange(hk).reshape(n_hub, horizon)
        n_var = 3 * hk
        rows, cols, vals = [], [], []
        r = 0
        for hh, hub in enumerate(hubs):
            for k in range(horizon):
                rows.append(r); cols.append(self.idx_e[hh, k]); vals.append(1.0)
                if k > 0:
                    rows.append(r); cols.append(self.idx_e[hh, k - 1]); vals.append(-1.0)
                rows.append(r); cols.append(self.idx_i[hh, k]); vals.append(-hub.eta_h)
                rows.append(r); cols.append(self.idx_ed[hh, k]); vals.append(1.0)
                r += 1
        a_eq = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_var))
        self.qp = QuadraticProgram(
            h=None, g=np.zeros(n_var), a_eq=a_eq, b_eq=np.zeros(r),
            lo=np.full(n_var, -np.inf), hi=np.full(n_var, np.inf),
        )
        self._warm = None
        self.set_window(t0, e_meas)

    def set_window(self, t0: int, e_meas: np.ndarray):
        horizon = self.h
        ks = t0 + np.arange(horizon)
        qp = self.qp
        h_diag = np.zeros(qp.a_eq.shape[1])
        for hh, hub in enumerate(self.hubs):
            traj = self.trajs[hh]
            base = hh * horizon
            qp.b_eq[base : base + horizon] = traj.e_arrive[ks] - traj.e_depart[ks]
            qp.b_eq[base] += e_meas[hh]
            h_diag[self.idx_i[hh]] = 2.0 * hub.r_h
            h_diag[self.idx_e[hh]] = 2.0 * hub.q_h
            qp.lo[self.idx_i[hh]] = 0.0
            qp.hi[self.idx_i[hh]] = traj.i_max[ks]
            qp.lo[self.idx_e[hh]] = 0.0
            qp.hi[self.idx_e[hh]] = traj.e_max[ks]
            qp.lo[self.idx_ed[hh]] = 0.0
            qp.hi[self.idx_ed[hh]] = traj.e_delta_max[ks]
        h_diag[h_diag <= 0.0] = 1e-7 * max(1.0, h_diag.max(initial=0.0))
        qp.h = sp.diags(h_diag, format="csc")
        self._base_h = h_diag.copy()
        self._g_base = np.zeros_like(h_diag)
        for hh, hub in enumerate(self.hubs):
            traj = self.trajs[hh]
            self._g_base[self.idx_e[hh]] = -2.0 * hub.q_h * traj.e_max[ks]
            self._g_base[self.idx_ed[hh]] = -hub.o_h
        self.t0 = t0

    def solve(self, price: np.ndarray, prox_i: tuple[float, np.ndarray] | None = None,
              prox_e: tuple[float, np.ndarray] | None = None,
              prox_ed: tuple[float, np.ndarray] | None = None):
        """Returns (i (H,K), e (H,K), ed (H,K), duals dict)."""
        g = self._g_base.copy()
        h_diag = self._base_h.copy()
        g[self.idx_i] += KA_PER_A * np.asarray(price, float)[None, :]
        for coef_center, idx in (
            (prox_i, self.idx_i),
            (prox_e, self.idx_e),
            (prox_ed, self.idx_ed),
        ):
            if coef_center is not None:
                coef, center = coef_center
                h_diag[idx] += coef
                g[idx] -= coef * np.asarray(center, float)
        qp = QuadraticProgram(
            h=sp.diags(h_diag, format="csc"), g=g, a_eq=self.qp.a_eq,
            b_eq=self.qp.b_eq, lo=self.qp.lo, hi=self.qp.hi,
        )
        sol = solve_qp_ipm(qp, eps=1e-9, warm=self._warm)
        if sol.status != "optimal":
            sol = solve_qp_ipm(qp, eps=1e-9)
        self._warm = sol
        x = sol.x
        duals = {
            "mu_lo_i": sol.mu_lo[self.idx_i],
            "mu_hi_i": sol.mu_hi[self.idx_i],
            "mu_lo_e": sol.mu_lo[self.idx_e],
            "mu_hi_e": sol.mu_hi[self.idx_e],
            "mu_lo_ed": sol.mu_lo[self.idx_ed],
            "mu_hi_ed": sol.mu_hi[self.idx_ed],
        }
        return x[self.idx_i], x[self.idx_e], x[self.idx_ed], duals
