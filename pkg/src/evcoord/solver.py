"""Convex QP solver with dual extraction, plus the PEM window scheduler.

The QP solver is an operator-splitting (ADMM) method in the OSQP style:
diagonal Ruiz equilibration, a single sparse LDL-like factorization of
the quasi-definite KKT system reused across iterations, over-relaxation,
optional adaptive penalty, and a polishing pass on the identified active
set for high-accuracy duals.  A ``QpWorkspace`` keeps the factorization
alive across repeated solves that change only vectors (costs, right-hand
sides, bounds) -- the pattern every MPC step and every distributed
iteration in this package relies on.

Sign convention: stationarity reads
    H x + g + A_eq' lam + A_in' mu_in + (mu_hi - mu_lo) = 0
with mu_in, mu_lo, mu_hi >= 0.

The PEM coordinator's mixed-integer window problem is solved exactly by
depth-first branch and bound over the monotone per-EV acceptance
patterns; the quadratic temperature constraint is evaluated by forward
recursion, so no conic machinery is needed once the binaries are fixed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = [
    "QuadraticProgram",
    "Solution",
    "SolverOptions",
    "QpWorkspace",
    "solve_qp",
    "PemWindow",
    "PemWindowSolution",
    "solve_pem_miqcqp",
]

_INF = np.inf


@dataclass
class SolverOptions:
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 20000
    rho: float = 0.1
    rho_eq_scale: float = 1e3
    sigma: float = 1e-6
    alpha: float = 1.6
    scaling_iters: int = 10
    adaptive_rho: bool = True
    adaptive_interval: int = 100
    adaptive_max_updates: int = 12
    polish: bool = True
    polish_delta: float = 1e-9
    polish_interval: int = 250  # first in-loop polish attempt; doubles after each miss
    check_interval: int = 25
    eps_infeas: float = 1e-7
    validate: bool = True
    method: str = "admm"  # "admm" | "ipm"
    ipm_fallback: bool = True  # rescue max_iter ADMM solves with the interior point


@dataclass
class QuadraticProgram:
    """min 0.5 x'Hx + g'x  s.t.  A_eq x = b_eq, A_in x <= b_in, lo <= x <= hi."""

    h: sp.spmatrix
    g: np.ndarray
    a_eq: sp.spmatrix | None = None
    b_eq: np.ndarray | None = None
    a_in: sp.spmatrix | None = None
    b_in: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def validate(self):
        n = self.n
        if self.h.shape != (n, n):
            raise ValueError("H must be square")
        if self.g.shape != (n,):
            raise ValueError("g dimension mismatch")
        d = self.h - self.h.T
        if d.nnz and abs(d).max() > 1e-8 * max(1.0, abs(self.h).max()):
            raise ValueError("H must be symmetric")
        for a, b, name in ((self.a_eq, self.b_eq, "eq"), (self.a_in, self.b_in, "in")):
            if (a is None) != (b is None):
                raise ValueError(f"a_{name}/b_{name} must be given together")
            if a is not None and (a.shape[1] != n or a.shape[0] != len(b)):
                raise ValueError(f"a_{name} dimension mismatch")
        lo = -np.inf * np.ones(n) if self.lo is None else np.asarray(self.lo, float)
        hi = np.inf * np.ones(n) if self.hi is None else np.asarray(self.hi, float)
        if np.any(lo > hi):
            raise ValueError("lo > hi for some variable")
        if n <= 400:
            # PSD check by attempted factorization, cheap only for small problems
            hd = self.h.toarray() if sp.issparse(self.h) else np.asarray(self.h)
            try:
                np.linalg.cholesky(hd + 1e-10 * max(1.0, np.trace(hd) / n) * np.eye(n))
            except np.linalg.LinAlgError:
                raise ValueError("H is not positive semidefinite") from None


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    lam_eq: np.ndarray
    mu_in: np.ndarray
    mu_lo: np.ndarray
    mu_hi: np.ndarray
    status: str
    prim_res: float
    dual_res: float
    iterations: int
    polished: bool
    solve_time: float
    y_full: np.ndarray = field(repr=False, default=None)


def _factor_kkt(kkt: sp.csc_matrix):
    """LDL-style factorization of a quasi-definite KKT system.

    Symmetric minimum-degree ordering with pivoting disabled: stable for
    quasi-definite matrices and an order of magnitude less fill than the
    unsymmetric default on these block systems.
    """
    return splu(
        kkt,
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )


def _col_inf_norms(m: sp.spmatrix) -> np.ndarray:
    m = sp.csc_matrix(abs(m))
    out = np.zeros(m.shape[1])
    if m.nnz:
        ptr = m.indptr
        nonempty = np.flatnonzero(np.diff(ptr) > 0)
        out[nonempty] = np.maximum.reduceat(m.data, ptr[nonempty])
    return out


def _row_inf_norms(m: sp.spmatrix) -> np.ndarray:
    return _col_inf_norms(sp.csc_matrix(m).T)


def _ruiz_scale(p: sp.spmatrix, a: sp.spmatrix, g: np.ndarray, iters: int):
    """Modified Ruiz equilibration of [[P, A'], [A, 0]] plus cost scaling.

    Returns the scaled (p, a, g) and the diagonal scalings (d, e) with the
    cost factor c such that x = d * x_scaled, y = (e * y_scaled) / c.
    """
    n = p.shape[0]
    m = a.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    c = 1.0
    g = np.asarray(g, float).copy()
    for _ in range(iters):
        np_col = _col_inf_norms(p)
        a_col = _col_inf_norms(a)
        a_row = _row_inf_norms(a)
        dx = np.maximum(np.maximum(np_col, a_col), 1e-8) ** -0.5
        de = np.maximum(a_row, 1e-8) ** -0.5
        dxm = sp.diags(dx)
        dem = sp.diags(de)
        p = dxm @ p @ dxm
        a = dem @ a @ dxm
        g = dx * g
        d *= dx
        e *= de
        p_col_mean = _col_inf_norms(p).mean()
        gamma = 1.0 / max(p_col_mean, np.linalg.norm(g, np.inf), 1e-8)
        p = p * gamma
        g = g * gamma
        c *= gamma
    return p.tocsc(), a.tocsc(), g, d, e, c


class QpWorkspace:
    """Factorized solver state for one constraint-matrix pattern.

    The matrices (H and the stacked constraint rows) are fixed at
    construction; ``solve`` may be called repeatedly with new vectors.
    Box bounds are rows of an identity block, so they may change per
    solve without refactorization.
    """

    def __init__(self, qp: QuadraticProgram, opts: SolverOptions | None = None):
        self.opts = opts or SolverOptions()
        if self.opts.validate:
            qp.validate()
        n = qp.n
        self.n = n
        self.me = 0 if qp.a_eq is None else qp.a_eq.shape[0]
        self.mi = 0 if qp.a_in is None else qp.a_in.shape[0]
        blocks = []
        if qp.a_eq is not None:
            blocks.append(sp.csc_matrix(qp.a_eq))
        if qp.a_in is not None:
            blocks.append(sp.csc_matrix(qp.a_in))
        blocks.append(sp.identity(n, format="csc"))
        a = sp.vstack(blocks, format="csc")
        self.m = a.shape[0]
        p = sp.csc_matrix(sp.triu(qp.h) + sp.triu(qp.h, 1).T)  # symmetrize exactly
        self.p_sc, self.a_sc, _, self.d, self.e, self.c = _ruiz_scale(
            p, a, qp.g, self.opts.scaling_iters
        )

        rho_vec = np.full(self.m, self.opts.rho)
        rho_vec[: self.me] *= self.opts.rho_eq_scale
        self._set_rho(rho_vec)

        self._qp = qp
        self._h_sym = sp.csc_matrix(sp.triu(qp.h) + sp.triu(qp.h, 1).T)
        rows = []
        if qp.a_eq is not None:
            rows.append(sp.csc_matrix(qp.a_eq))
        if qp.a_in is not None:
            rows.append(sp.csc_matrix(qp.a_in))
        rows.append(sp.identity(n, format="csc"))
        self._a_full = sp.vstack(rows, format="csc")
        self._x = np.zeros(n)
        self._z = np.zeros(self.m)
        self._y = np.zeros(self.m)

    def _set_rho(self, rho_vec: np.ndarray):
        self.rho_vec = rho_vec
        kkt = sp.bmat(
            [
                [self.p_sc + self.opts.sigma * sp.identity(self.n), self.a_sc.T],
                [self.a_sc, -sp.diags(1.0 / rho_vec)],
            ],
            format="csc",
        )
        self._lu = _factor_kkt(kkt)

    # -- per-solve vector plumbing -------------------------------------

    def _stack_bounds(self, b_eq, b_in, lo, hi):
        n, me, mi = self.n, self.me, self.mi
        l = np.empty(self.m)
        u = np.empty(self.m)
        if me:
            l[:me] = u[:me] = b_eq
        if mi:
            l[me : me + mi] = -_INF
            u[me : me + mi] = b_in
        l[me + mi :] = -_INF if lo is None else lo
        u[me + mi :] = _INF if hi is None else hi
        return l, u

    def solve(
        self,
        g=None,
        b_eq=None,
        b_in=None,
        lo=None,
        hi=None,
        x0=None,
        y0=None,
        max_iter=None,
    ) -> Solution:
        t0 = time.perf_counter()
        opts = self.opts
        qp = self._qp
        g = qp.g if g is None else np.asarray(g, float)
        b_eq = qp.b_eq if b_eq is None else b_eq
        b_in = qp.b_in if b_in is None else b_in
        lo = qp.lo if lo is None else lo
        hi = qp.hi if hi is None else hi
        l_un, u_un = self._stack_bounds(b_eq, b_in, lo, hi)

        d, e, c = self.d, self.e, self.c
        q_sc = c * (d * g)
        l_sc = e * l_un
        u_sc = e * u_un

        x = self._x if x0 is None else np.asarray(x0, float) / d
        y = self._y if y0 is None else c * (np.asarray(y0, float) / e)
        z = np.clip(self.a_sc @ x, l_sc, u_sc)

        rho = self.rho_vec
        sigma, alpha = opts.sigma, opts.alpha
        a_sc, p_sc = self.a_sc, self.p_sc
        cap = opts.max_iter if max_iter is None else max_iter
        status = "max_iter"
        it = 0
        rho_updates = 0
        x_prev = x.copy()
        y_prev = y.copy()
        prim_res = dual_res = np.inf
        polished = False
        x_un = y_un = None
        next_polish = opts.polish_interval if opts.polish else None

        while it < cap:
            it += 1
            rhs = np.concatenate([sigma * x - q_sc, z - y / rho])
            sol = self._lu.solve(rhs)
            x_t = sol[: self.n]
            nu = sol[self.n :]
            z_t = z + (nu - y) / rho
            x_new = alpha * x_t + (1 - alpha) * x
            z_relax = alpha * z_t + (1 - alpha) * z
            z_new = np.clip(z_relax + y / rho, l_sc, u_sc)
            y_new = y + rho * (z_relax - z_new)
            x, z = x_new, z_new
            y = y_new

            if it % opts.check_interval == 0 or it == cap:
                ax = a_sc @ x
                prim_vec = (ax - z) / e
                px = p_sc @ x
                aty = a_sc.T @ y
                dual_vec = (px + q_sc + aty) / d / c
                prim_res = np.linalg.norm(prim_vec, np.inf) if self.m else 0.0
                dual_res = np.linalg.norm(dual_vec, np.inf)
                eps_prim = opts.eps_abs + opts.eps_rel * max(
                    np.linalg.norm(ax / e, np.inf) if self.m else 0.0,
                    np.linalg.norm(z / e, np.inf) if self.m else 0.0,
                )
                eps_dual = opts.eps_abs + opts.eps_rel * max(
                    np.linalg.norm(px / d, np.inf),
                    np.linalg.norm(aty / d, np.inf),
                    np.linalg.norm(q_sc / d, np.inf),
                ) / c
                if prim_res <= eps_prim and dual_res <= eps_dual:
                    status = "optimal"
                    break
                dy = y - y_prev
                dx = x - x_prev
                if self._primal_infeasible(dy, l_sc, u_sc):
                    status = "infeasible"
                    break
                if self._dual_infeasible(dx, q_sc, l_sc, u_sc):
                    status = "infeasible"
                    break
                y_prev = y.copy()
                x_prev = x.copy()
                if next_polish is not None and it >= next_polish:
                    # direct refinement on the current active-set guess; a
                    # successful polish short-circuits slow tail convergence
                    next_polish *= 2
                    pol = self._polish(
                        d * x, (e * y) / c, g, l_un, u_un, prim_hint=prim_res
                    )
                    if pol is not None:
                        px_p, py_p, pr_p, dr_p = pol
                        if pr_p <= eps_prim and dr_p <= eps_dual:
                            x_un, y_un = px_p, py_p
                            prim_res, dual_res = pr_p, dr_p
                            status = "optimal"
                            polished = True
                            break
                if (
                    opts.adaptive_rho
                    and rho_updates < opts.adaptive_max_updates
                    and it % opts.adaptive_interval == 0
                ):
                    prim_nrm = max(
                        np.linalg.norm(ax, np.inf), np.linalg.norm(z, np.inf), 1e-10
                    )
                    dual_nrm = max(
                        np.linalg.norm(px, np.inf),
                        np.linalg.norm(aty, np.inf),
                        np.linalg.norm(q_sc, np.inf),
                        1e-10,
                    )
                    scale = np.sqrt(
                        (np.linalg.norm(ax - z, np.inf) / prim_nrm)
                        / max(
                            np.linalg.norm(px + q_sc + aty, np.inf) / dual_nrm, 1e-12
                        )
                    )
                    if scale > 5.0 or scale < 0.2:
                        new_rho = np.clip(self.rho_vec * scale, 1e-6, 1e6)
                        self._set_rho(new_rho)
                        rho = self.rho_vec
                        rho_updates += 1

        self._x, self._z, self._y = x.copy(), z.copy(), y.copy()

        if x_un is None:
            x_un = d * x
            y_un = (e * y) / c
            if status == "optimal" and opts.polish:
                pol = self._polish(x_un, y_un, g, l_un, u_un, prim_hint=prim_res)
                if pol is not None and max(pol[2], pol[3]) <= max(prim_res, dual_res) * 1.01 + 1e-12:
                    x_un, y_un = pol[0], pol[1]
                    prim_res, dual_res = pol[2], pol[3]
                    polished = True

        if status == "max_iter" and opts.ipm_fallback:
            rescue = solve_qp_ipm(
                replace(qp, g=g, b_eq=b_eq, b_in=b_in, lo=lo, hi=hi),
                eps=max(1e-10, min(opts.eps_abs, opts.eps_rel)),
            )
            if rescue.status == "optimal":
                rescue.iterations += it
                rescue.solve_time = time.perf_counter() - t0
                return rescue

        return self._package(
            qp, g, l_un, u_un, x_un, y_un, status, prim_res, dual_res, it, polished, t0
        )

    # -- infeasibility certificates ------------------------------------

    def _primal_infeasible(self, dy, l_sc, u_sc) -> bool:
        nrm = np.linalg.norm(dy / self.c * self.e, np.inf)
        if nrm < 1e-14:
            return False
        eps = self.opts.eps_infeas * nrm
        aty = np.linalg.norm((self.a_sc.T @ dy) / self.d, np.inf) / self.c
        if aty > eps:
            return False
        dy_p = np.maximum(dy, 0.0)
        dy_m = np.minimum(dy, 0.0)
        if np.any(dy_p[np.isinf(u_sc)] > eps) or np.any(dy_m[np.isinf(l_sc)] < -eps):
            return False
        support = u_sc[np.isfinite(u_sc)] @ dy_p[np.isfinite(u_sc)] + l_sc[
            np.isfinite(l_sc)
        ] @ dy_m[np.isfinite(l_sc)]
        return support / self.c < -eps

    def _dual_infeasible(self, dx, q_sc, l_sc, u_sc) -> bool:
        nrm = np.linalg.norm(self.d * dx, np.inf)
        if nrm < 1e-14:
            return False
        eps = self.opts.eps_infeas * nrm
        if (q_sc @ dx) / self.c >= -eps:
            return False
        if np.linalg.norm((self.p_sc @ dx) / self.d, np.inf) / self.c > eps:
            return False
        adx = (self.a_sc @ dx) / self.e
        bad = (np.isfinite(u_sc) & (adx > eps)) | (np.isfinite(l_sc) & (adx < -eps))
        return not np.any(bad)

    # -- polishing -------------------------------------------------------

    def _solve_active(self, low, upp, g, l_un, u_un, x_ref, prox):
        """KKT solve with the given rows active.  Zero-curvature variable
        directions are pinned proximally to x_ref so the reduced system
        stays nonsingular on degenerate faces (the PWL segment split)."""
        act = np.where(low | upp)[0]
        a_act = self._a_full[act]
        b_act = np.where(upp[act], u_un[act], l_un[act])
        na = len(act)
        delta = self.opts.polish_delta
        h_prox = self._h_sym + sp.diags(prox)
        g_prox = g - prox * x_ref
        kkt = sp.bmat(
            [
                [h_prox + delta * sp.identity(self.n), a_act.T],
                [a_act, -delta * sp.identity(na) if na else None],
            ]
            if na
            else [[h_prox + delta * sp.identity(self.n)]],
            format="csc",
        )
        rhs = np.concatenate([-g_prox, b_act])
        try:
            lu = _factor_kkt(kkt)
        except RuntimeError:
            return None
        sol = lu.solve(rhs)
        for _ in range(2):  # refine against the delta-free proximal system
            res = rhs.copy()
            res[: self.n] -= h_prox @ sol[: self.n]
            if na:
                res[: self.n] -= a_act.T @ sol[self.n :]
                res[self.n :] -= a_act @ sol[: self.n]
            sol = sol + lu.solve(res)
        x_p = sol[: self.n]
        y_p = np.zeros(self.m)
        if na:
            y_p[act] = sol[self.n :]
        return x_p, y_p

    def _polish(self, x, y, g, l_un, u_un, prim_hint=0.0, max_rounds=25):
        """Direct solve on the guessed active set, refined by add/drop
        rounds (violated rows in, wrong-sign multipliers out): a
        primal-dual active-set finisher seeded from the ADMM iterate."""
        me = self.me
        ax = self._a_full @ x
        bscale = np.maximum(
            1.0,
            np.maximum(
                np.where(np.isfinite(l_un), np.abs(l_un), 0.0),
                np.where(np.isfinite(u_un), np.abs(u_un), 0.0),
            ),
        )
        ztol = 1e-7 * bscale
        near_l = np.isfinite(l_un) & (ax - l_un <= ztol)
        near_u = np.isfinite(u_un) & (u_un - ax <= ztol)
        ytol = 1e-10 * max(1.0, np.linalg.norm(y, np.inf))
        low = np.isfinite(l_un) & (((y < -ytol) & ~near_u) | (near_l & ~near_u))
        upp = np.isfinite(u_un) & (((y > ytol) & ~near_l) | (near_u & ~near_l))
        low[:me] = False
        upp[:me] = True  # equality rows always active (carried on the upper side)
        h_diag = self._h_sym.diagonal()
        dual_scale = max(1.0, np.linalg.norm(g, np.inf), float(np.max(h_diag, initial=0.0)))
        prox = np.where(h_diag <= 0.0, 1e-9 * dual_scale, 0.0)
        best = None
        for _ in range(max_rounds):
            got = self._solve_active(low, upp, g, l_un, u_un, x, prox)
            if got is None:
                break
            x_p, y_p = got
            prim_new, dual_new = self._kkt_residuals(x_p, y_p, g, l_un, u_un)
            if best is None or max(prim_new, dual_new) < max(best[2], best[3]):
                best = (x_p, y_p, prim_new, dual_new)
            ax_p = self._a_full @ x_p
            tol_p = 1e-9 * bscale
            free = ~(low | upp)
            viol_l = free & np.isfinite(l_un) & (ax_p < l_un - tol_p)
            viol_u = free & np.isfinite(u_un) & (ax_p > u_un + tol_p)
            dtol = 1e-9 * max(1.0, np.linalg.norm(y_p, np.inf))
            wrong = np.where(low, np.maximum(y_p, 0.0), 0.0) + np.where(
                upp, np.maximum(-y_p, 0.0), 0.0
            )
            wrong[:me] = 0.0
            if not (viol_l.any() or viol_u.any() or wrong.max(initial=0.0) > dtol):
                break
            low |= viol_l
            upp |= viol_u
            if not (viol_l.any() or viol_u.any()) and wrong.max(initial=0.0) > dtol:
                # no primal repairs left: release the single worst multiplier
                j = int(np.argmax(wrong))
                low[j] = False
                upp[j] = False
            both = low & upp
            low[both] = False
        return best

    def _kkt_residuals(self, x, y, g, l_un, u_un):
        ax = self._a_full @ x
        prim = np.linalg.norm(
            np.maximum(ax - u_un, 0.0) + np.minimum(ax - l_un, 0.0), np.inf
        )
        dual = np.linalg.norm(self._h_sym @ x + g + self._a_full.T @ y, np.inf)
        return prim, dual

    def _package(self, qp, g, l_un, u_un, x, y, status, pr, dr, it, polished, t0):
        me, mi, n = self.me, self.mi, self.n
        lam_eq = y[:me].copy()
        mu_in = np.maximum(y[me : me + mi], 0.0)
        y_box = y[me + mi :]
        mu_hi = np.maximum(y_box, 0.0)
        mu_lo = np.maximum(-y_box, 0.0)
        obj = 0.5 * x @ (qp.h @ x) + g @ x
        if status == "optimal" and polished:
            pr, dr = self._kkt_residuals(x, y, g, l_un, u_un)
        return Solution(
            x=x,
            objective=float(obj),
            lam_eq=lam_eq,
            mu_in=mu_in,
            mu_lo=mu_lo,
            mu_hi=mu_hi,
            status=status,
            prim_res=float(pr),
            dual_res=float(dr),
            iterations=it,
            polished=polished,
            solve_time=time.perf_counter() - t0,
            y_full=y,
        )


def solve_qp(qp: QuadraticProgram, opts: SolverOptions | None = None, **kw) -> Solution:
    """One-shot solve; builds a workspace, solves, returns the Solution."""
    opts = opts or SolverOptions()
    if opts.method == "ipm":
        if opts.validate:
            qp.validate()
        return solve_qp_ipm(qp, eps=max(1e-10, min(opts.eps_abs, opts.eps_rel)))
    return QpWorkspace(qp, opts).solve(**kw)


# ---------------------------------------------------------------------------
# Interior-point solve (Mehrotra predictor-corrector on the box form)
# ---------------------------------------------------------------------------


def solve_qp_ipm(
    qp: QuadraticProgram,
    eps: float = 1e-9,
    max_iter: int = 100,
    validate: bool = False,
    warm: Solution | None = None,
) -> Solution:
    """Sparse primal-dual interior-point solve with high-accuracy duals.

    Inequality rows are folded into the box form via slack variables.
    Far less sensitive to curvature spread than the operator-splitting
    path, at the cost of one factorization per Newton step; used for
    small hard problems and as the fallback finisher.
    """
    t0 = time.perf_counter()
    if validate:
        qp.validate()
    n0 = qp.n
    mi = 0 if qp.a_in is None else qp.a_in.shape[0]
    me = 0 if qp.a_eq is None else qp.a_eq.shape[0]
    n = n0 + mi
    h = sp.block_diag(
        [sp.csc_matrix(sp.triu(qp.h) + sp.triu(qp.h, 1).T), sp.csc_matrix((mi, mi))],
        format="csc",
    )
    g = np.concatenate([qp.g, np.zeros(mi)])
    lo = np.concatenate(
        [qp.lo if qp.lo is not None else -np.inf * np.ones(n0), np.zeros(mi)]
    )
    hi = np.concatenate(
        [qp.hi if qp.hi is not None else np.inf * np.ones(n0), np.inf * np.ones(mi)]
    )
    rows = []
    rhs = []
    if me:
        rows.append(sp.hstack([sp.csc_matrix(qp.a_eq), sp.csc_matrix((me, mi))]))
        rhs.append(qp.b_eq)
    if mi:
        rows.append(sp.hstack([sp.csc_matrix(qp.a_in), sp.identity(mi)]))
        rhs.append(qp.b_in)
    a = sp.vstack(rows, format="csc") if rows else sp.csc_matrix((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    m = a.shape[0]

    # equilibrate: the barrier diagonal z/s spans the squared box-width
    # range, so narrow boxes must be stretched to O(1) first
    h, a, g, dvec, evec, cost_c = _ruiz_scale(h, a, g, 10)
    lo = lo / dvec
    hi = hi / dvec
    b = evec * b

    has_l = np.isfinite(lo)
    has_u = np.isfinite(hi)
    n_barrier = int(has_l.sum() + has_u.sum())

    x = np.zeros(n)
    two = has_l & has_u
    x[two] = 0.5 * (lo[two] + hi[two])
    only_l = has_l & ~has_u
    only_u = has_u & ~has_l
    x[only_l] = lo[only_l] + 1.0
    x[only_u] = hi[only_u] - 1.0
    zl = np.where(has_l, 1.0, 0.0)
    zu = np.where(has_u, 1.0, 0.0)
    y = np.zeros(m)
    if warm is not None and warm.x is not None and len(warm.x) == n0:
        # previous MPC step's point, pushed strictly inside the box
        x_w = np.concatenate([warm.x, np.zeros(mi)]) / dvec
        if mi:
            x_w[n0:] = np.maximum(b[me:] - a[me:] @ x_w, 1e-6)
        width = np.where(two, hi - lo, np.inf)
        cushion = np.minimum(1e-4 * np.maximum(1.0, np.abs(x_w)), width / 4)
        x = np.clip(x_w, np.where(has_l, lo + cushion, -np.inf), np.where(has_u, hi - cushion, np.inf))
        zw = np.concatenate([warm.mu_lo, np.zeros(mi)]) * dvec * cost_c
        zl = np.where(has_l, np.maximum(zw, 1e-6), 0.0)
        zw = np.concatenate([warm.mu_hi, np.zeros(mi)]) * dvec * cost_c
        zu = np.where(has_u, np.maximum(zw, 1e-6), 0.0)
        if me and warm.lam_eq is not None and len(warm.lam_eq) == me:
            y[:me] = cost_c * warm.lam_eq / evec[:me]
    sl = np.where(has_l, np.maximum(x - lo, 1e-12), 1.0)
    su = np.where(has_u, np.maximum(hi - x, 1e-12), 1.0)
    delta = 1e-9
    h_diag = h.diagonal()
    h_is_diag = (h - sp.diags(h_diag)).nnz == 0
    a_csr = sp.csr_matrix(a)
    scale_d = max(1.0, np.linalg.norm(g, np.inf))
    scale_p = max(1.0, np.linalg.norm(b, np.inf) if m else 0.0)
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        rx = h @ x + g + (a.T @ y if m else 0.0) - np.where(has_l, zl, 0.0) + np.where(
            has_u, zu, 0.0
        )
        rb = (a @ x - b) if m else np.zeros(0)
        mu = (sl[has_l] @ zl[has_l] + su[has_u] @ zu[has_u]) / max(n_barrier, 1)
        if (
            np.linalg.norm(rx, np.inf) <= eps * scale_d * 10
            and (np.linalg.norm(rb, np.inf) <= eps * scale_p * 10 if m else True)
            and mu <= eps * max(1.0, abs(0.5 * x @ (h @ x) + g @ x))
        ):
            status = "optimal"
            break
        d = np.where(has_l, zl / sl, 0.0) + np.where(has_u, zu / su, 0.0)
        if h_is_diag and m:
            # diagonal Hessian: eliminate x and factor the SPD normal
            # equations A (H+D)^-1 A' in the much smaller row space
            dinv = 1.0 / (h_diag + d + 1e-14)
            m_mat = (a_csr @ sp.diags(dinv) @ a_csr.T).tocsc()
            m_mat = m_mat + 1e-12 * sp.identity(m)
            try:
                lu = _factor_kkt(m_mat)
            except RuntimeError:
                break

            def solve_kkt(rx_v, rb_v):
                dy = lu.solve(a_csr @ (dinv * rx_v) - rb_v)
                dx = dinv * (rx_v - a_csr.T @ dy)
                res_x = rx_v - (h_diag + d) * dx - a_csr.T @ dy
                res_b = rb_v - a_csr @ dx
                dy2 = lu.solve(a_csr @ (dinv * res_x) - res_b)
                dx2 = dinv * (res_x - a_csr.T @ dy2)
                return dx + dx2, dy + dy2

        else:
            hd = h + sp.diags(d)
            kkt = sp.bmat(
                [
                    [hd + delta * sp.identity(n), a.T if m else None],
                    [a if m else None, -delta * sp.identity(m) if m else None],
                ],
                format="csc",
            ) if m else sp.csc_matrix(hd + delta * sp.identity(n))
            try:
                lu = _factor_kkt(kkt)
            except RuntimeError:
                break

            def solve_kkt(rx_v, rb_v):
                # refine against the unregularized system so the delta shift
                # does not put a floor under the equality residuals
                rhs_v = np.concatenate([rx_v, rb_v]) if m else rx_v
                out = lu.solve(rhs_v)
                for _ in range(2):
                    if m:
                        res_x = rx_v - hd @ out[:n] - a.T @ out[n:]
                        res_b = rb_v - a @ out[:n]
                        out = out + lu.solve(np.concatenate([res_x, res_b]))
                    else:
                        out = out + lu.solve(rx_v - hd @ out)
                return (out[:n], out[n:]) if m else (out, np.zeros(0))

        # affine predictor
        rhs_x = -rx - np.where(has_l, zl, 0.0) + np.where(has_u, zu, 0.0)
        dx_a, dy_a = solve_kkt(rhs_x, -rb)
        dzl_a = np.where(has_l, -zl - (zl / sl) * dx_a, 0.0)
        dzu_a = np.where(has_u, -zu + (zu / su) * dx_a, 0.0)
        dsl_a = dx_a
        dsu_a = -dx_a

        def max_step(v, dv, mask):
            neg = mask & (dv < 0)
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(-v[neg] / dv[neg])))

        ap = min(max_step(sl, dsl_a, has_l), max_step(su, dsu_a, has_u))
        ad = min(max_step(zl, dzl_a, has_l), max_step(zu, dzu_a, has_u))
        mu_aff = (
            (sl + ap * dsl_a)[has_l] @ (zl + ad * dzl_a)[has_l]
            + (su + ap * dsu_a)[has_u] @ (zu + ad * dzu_a)[has_u]
        ) / max(n_barrier, 1)
        sigma = (mu_aff / max(mu, 1e-300)) ** 3

        # corrector
        corr_l = np.where(has_l, (sigma * mu - dsl_a * dzl_a) / np.maximum(sl, 1e-300), 0.0)
        corr_u = np.where(has_u, (sigma * mu - dsu_a * dzu_a) / np.maximum(su, 1e-300), 0.0)
        rhs_x = -rx - np.where(has_l, zl, 0.0) + np.where(has_u, zu, 0.0) + corr_l - corr_u
        dx, dy = solve_kkt(rhs_x, -rb)
        dzl = np.where(has_l, -zl + corr_l - (zl / sl) * dx, 0.0)
        dzu = np.where(has_u, -zu + corr_u + (zu / su) * dx, 0.0)
        dsl = dx
        dsu = -dx
        tau = 0.995 if mu > 1e-8 else 0.99995
        ap = tau * min(max_step(sl, dsl, has_l), max_step(su, dsu, has_u))
        ad = tau * min(max_step(zl, dzl, has_l), max_step(zu, dzu, has_u))
        x = x + ap * dx
        sl = np.where(has_l, sl + ap * dsl, 1.0)
        su = np.where(has_u, su + ap * dsu, 1.0)
        y = y + ad * dy
        zl = np.where(has_l, zl + ad * dzl, 0.0)
        zu = np.where(has_u, zu + ad * dzu, 0.0)

    x = dvec * x
    y = (evec * y) / cost_c
    zl = zl / dvec / cost_c
    zu = zu / dvec / cost_c
    x_out = x[:n0]
    lam_eq = y[:me]
    mu_in = np.maximum(y[me:], 0.0)
    mu_lo = np.where(has_l[:n0], zl[:n0], 0.0)
    mu_hi = np.where(has_u[:n0], zu[:n0], 0.0)
    obj = 0.5 * x_out @ (qp.h @ x_out) + qp.g @ x_out
    rx_f = np.linalg.norm(
        qp.h @ x_out
        + qp.g
        + (qp.a_eq.T @ lam_eq if me else 0.0)
        + (qp.a_in.T @ mu_in if mi else 0.0)
        - mu_lo
        + mu_hi,
        np.inf,
    )
    prim = 0.0
    if me:
        prim = max(prim, float(np.linalg.norm(qp.a_eq @ x_out - qp.b_eq, np.inf)))
    if mi:
        prim = max(prim, float(np.max(qp.a_in @ x_out - qp.b_in, initial=0.0)))
    return Solution(
        x=x_out,
        objective=float(obj),
        lam_eq=lam_eq,
        mu_in=mu_in,
        mu_lo=mu_lo,
        mu_hi=mu_hi,
        status=status,
        prim_res=prim,
        dual_res=float(rx_f),
        iterations=it,
        polished=True,
        solve_time=time.perf_counter() - t0,
        y_full=None,
    )


# ---------------------------------------------------------------------------
# PEM coordinator window problem (exact mixed-integer solve)
# ---------------------------------------------------------------------------


@dataclass
class PemWindow:
    """A delta-step acceptance problem as seen by the PEM coordinator.

    request_class: 0 = no request, 1 = priority request, 2 = low-priority
    request (SoC target already met).  locked[k, n] forces u_n(k) = 1
    (consuming a packet or opted out).  i_max_ka holds each charger's
    rated current in kA; privacy-wise this is the only per-EV parameter
    the coordinator sees besides the request codes.
    """

    delta: int
    tau: float
    gamma: float
    rho: float
    t_max: float
    t_meas: float
    ta: np.ndarray
    i_d: np.ndarray
    i_max_ka: np.ndarray
    request_class: np.ndarray
    locked: np.ndarray
    omega_e: float
    omega_s: float


@dataclass
class PemWindowSolution:
    u: np.ndarray  # (delta, N) binary acceptance matrix
    slack: float
    objective: float
    nodes: int


def _window_temp_slack(w: PemWindow, u: np.ndarray) -> float:
    temp = w.t_meas
    worst = 0.0
    for k in range(w.delta):
        i_tot = w.i_d[k] + float(u[k] @ w.i_max_ka)
        temp = w.tau * temp + w.gamma * i_tot * i_tot + w.rho * w.ta[k]
        worst = max(worst, temp - w.t_max)
    return max(0.0, worst)


def _window_objective(w: PemWindow, u: np.ndarray, slack: float) -> float:
    gain = 0.0
    e1 = w.request_class == 1
    e2 = w.request_class == 2
    gain += float(u[:, e1].sum()) + w.omega_e * float(u[:, e2].sum())
    return gain - w.omega_s * slack


def _monotone_patterns(delta: int):
    pats = []
    for ones in range(delta, -1, -1):  # request-rich patterns first
        pats.append((0,) * (delta - ones) + (1,) * ones)
    return pats


def solve_pem_miqcqp(w: PemWindow) -> PemWindowSolution:
    """Exact branch-and-bound over monotone acceptance patterns.

    Requesters branch in i_max-descending order with a valid bound (full
    remaining gain minus the slack already unavoidable -- slack is
    monotone nondecreasing in u); a second lexicographic pass pins the
    tie-break so that among equal-value schedules the lowest-index EVs
    are accepted.  The temperature slack keeps every instance feasible.
    """
    delta, n = w.delta, len(w.i_max_ka)
    u0 = np.array(w.locked, dtype=float, copy=True)
    if u0.shape != (delta, n):
        raise ValueError("locked must be (delta, N)")
    requesters = [
        i for i in range(n) if w.request_class[i] in (1, 2) and not w.locked[:, i].any()
    ]
    weights = np.where(w.request_class == 1, 1.0, w.omega_e)
    pats = _monotone_patterns(delta)
    order = sorted(requesters, key=lambda i: (-w.i_max_ka[i], i))
    state = {"nodes": 0, "best": -np.inf, "u_best": u0.copy()}

    def search(pos: int, u_cur: np.ndarray, gain: float):
        state["nodes"] += 1
        slack_now = _window_temp_slack(w, u_cur)
        rest = sum(weights[i] * delta for i in order[pos:])
        if gain + rest - w.omega_s * slack_now <= state["best"] + 1e-12:
            return
        if pos == len(order):
            val = gain - w.omega_s * slack_now
            if val > state["best"] + 1e-12:
                state["best"] = val
                state["u_best"] = u_cur.copy()
            return
        i = order[pos]
        for pat in pats:
            for k in range(delta):
                u_cur[k, i] = pat[k]
            search(pos + 1, u_cur, gain + weights[i] * sum(pat))
        for k in range(delta):
            u_cur[k, i] = 0.0

    search(0, u0.copy(), 0.0)
    best = state["best"]

    def completion_reaches(u_cur, remaining, gain) -> bool:
        slack_now = _window_temp_slack(w, u_cur)
        rest = sum(weights[i] * delta for i in remaining)
        if gain + rest - w.omega_s * slack_now < best - 1e-12:
            return False
        if not remaining:
            return True
        i = remaining[0]
        ok = False
        for pat in pats:
            for k in range(delta):
                u_cur[k, i] = pat[k]
            if completion_reaches(u_cur, remaining[1:], gain + weights[i] * sum(pat)):
                ok = True
                break
        for k in range(delta):
            u_cur[k, i] = 0.0
        return ok

    # Lexicographic tie-break: walk EVs in index order, keeping the most
    # acceptance-rich pattern that still admits an optimal completion.
    u_lex = u0.copy()
    gain = 0.0
    lex_order = sorted(requesters)
    feasible_lex = True
    for pos, i in enumerate(lex_order):
        chosen = None
        for pat in pats:  # (1,..,1) first => prefer acceptance at low index
            for k in range(delta):
                u_lex[k, i] = pat[k]
            if completion_reaches(u_lex, lex_order[pos + 1 :], gain + weights[i] * sum(pat)):
                chosen = pat
                break
        if chosen is None:
            feasible_lex = False
            break
        gain += weights[i] * sum(chosen)
    u_best = u_lex if feasible_lex else state["u_best"]
    slack = _window_temp_slack(w, u_best)
    obj = _window_objective(w, u_best, slack)
    if obj < best - 1e-9:  # numerical safety: fall back to the DFS incumbent
        u_best = state["u_best"]
        slack = _window_temp_slack(w, u_best)
        obj = _window_objective(w, u_best, slack)
    return PemWindowSolution(
        u=u_best.astype(int), slack=slack, objective=obj, nodes=state["nodes"]
    )
