"""PWL and epigraph relaxations of the current-temperature coupling.

Builds the equal-width piecewise-linear over-estimator of i_total^2,
computes its worst-case temperature error, and certifies relaxation
tightness on solved optimal-control trajectories (throttled-charger
witness and temperature-limit index equivalence).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import EvParams, TransformerParams

__all__ = [
    "PwlScheme",
    "TightnessReport",
    "OcpTrajectories",
    "CertificationError",
    "pwl_build",
    "pwl_upper_eval",
    "pwl_temp_error_bound",
    "soc_tightness_threshold",
    "certify_tightness",
]


class CertificationError(AssertionError):
    """A tightness/limit-index property failed on a solved trajectory."""


@dataclass(frozen=True)
class PwlScheme:
    """Equal-width segment scheme: delta_i = i_cap/M, slopes (2m-1)*delta_i."""

    delta_i: float
    slopes: np.ndarray

    @property
    def n_segments(self) -> int:
        return len(self.slopes)

    @property
    def i_cap(self) -> float:
        return self.delta_i * len(self.slopes)


def pwl_build(i_cap: float, m: int) -> PwlScheme:
    if m < 1:
        raise ValueError(f"segment count must be >= 1, got {m}")
    if i_cap <= 0:
        raise ValueError(f"i_cap must be positive, got {i_cap}")
    delta_i = i_cap / m
    slopes = (2.0 * np.arange(1, m + 1) - 1.0) * delta_i
    return PwlScheme(delta_i=delta_i, slopes=slopes)


def pwl_upper_eval(s: PwlScheme, i):
    """Adjacency-respecting envelope: the interpolant through the knots
    (m*delta_i, (m*delta_i)^2).

    This is the pointwise smallest e reachable by the adjacency-free
    segment variables at a given total current, and it over-estimates
    i^2 everywhere, with equality exactly at the knots.
    """
    arr = np.asarray(i, dtype=float)
    cap = s.i_cap
    if np.any(arr < -1e-9 * cap) or np.any(arr > cap * (1 + 1e-9)):
        raise ValueError(f"current outside [0, {cap}]")
    clipped = np.clip(arr, 0.0, cap)
    seg = np.minimum((clipped / s.delta_i).astype(int), s.n_segments - 1)
    knot = seg * s.delta_i
    val = knot**2 + s.slopes[seg] * (clipped - knot)
    return float(val) if np.isscalar(i) else val


def pwl_temp_error_bound(p: TransformerParams) -> float:
    """Worst one-step temperature over-estimate: gamma * i_cap^2 / (4 M^2)."""
    return p.gamma * p.i_cap**2 / (4.0 * p.n_segments**2)


def soc_tightness_threshold(p: EvParams, soc0: float) -> float:
    """SoC level below which a throttled charger certifies tightness.

    (M + s0)/(M + 1) with M = (q/r) * eta^2; degenerates to 1 when the
    effort weight r is zero.
    """
    if p.r == 0.0:
        return 1.0
    m = (p.q / p.r) * p.eta**2
    return (m + soc0) / (m + 1.0)


@dataclass
class OcpTrajectories:
    """A solved optimal-control trajectory in plain arrays.

    e and i_total are per-step (K,); temp is (K+1,) including the
    measured initial value; i is (N, K) in amperes; soc is (N, K+1)
    including the measured initial SoC.
    """

    e: np.ndarray
    i_total: np.ndarray
    temp: np.ndarray
    i: np.ndarray
    soc: np.ndarray

    def validate(self):
        k = len(self.e)
        if len(self.i_total) != k or len(self.temp) != k + 1:
            raise ValueError("trajectory arrays have inconsistent lengths")
        if self.i.shape[1] != k or self.soc.shape != (self.i.shape[0], k + 1):
            raise ValueError("per-EV arrays have inconsistent lengths")


@dataclass
class TightnessReport:
    gaps: np.ndarray  # e(k) - i_total(k)^2, per step
    last_tight_k: int | None  # largest step k with gap <= tol
    last_active_temp_k: int | None  # largest time index t>=1 with T(t) at the limit
    theorem1_witness: tuple[int, int] | None  # (ev index, step) with largest step
    tol: float


def certify_tightness(
    solution: OcpTrajectories,
    p: TransformerParams,
    evs: list[EvParams],
    tol: float | None = None,
    temp_tol: float | None = None,
    mu_e: np.ndarray | None = None,
    mu_t: np.ndarray | None = None,
) -> TightnessReport:
    """Check the tightness relations on a solved trajectory.

    Raises CertificationError when the relaxation direction is violated
    (e below the squared current beyond tol), when a throttled-charger
    witness exists at step k but some earlier gap exceeds tol, or when
    the temperature-limit index and the last tight step disagree
    (last_active_temp_k must equal last_tight_k + 1 whenever both
    exist).  last_active_temp_k is the *time* index of the temperature
    sample, one past the step index.

    mu_e / mu_t are the per-step multipliers of the epigraph constraint
    and the temperature cap.  When given, strict activity is read from
    them (positive multiplier); otherwise from primal proximity, which
    can over-count tight steps on degenerate instances where the solver
    parks a slack e on the curve.
    """
    solution.validate()
    if tol is None:
        tol = 1e-5 * max(1.0, p.i_cap**2)
    if temp_tol is None:
        temp_tol = 1e-5 * max(1.0, p.t_max)
    gaps = solution.e - solution.i_total**2
    if np.min(gaps, initial=0.0) < -tol:
        k_bad = int(np.argmin(gaps))
        raise CertificationError(
            f"relaxation direction violated at step {k_bad}: e - i_total^2 = {gaps[k_bad]:.3e}"
        )
    if mu_e is not None:
        dual_tol = 1e-8 * max(1.0, float(np.max(mu_e, initial=0.0)))
        tight = np.flatnonzero(mu_e > dual_tol)
    else:
        tight = np.flatnonzero(gaps <= tol)
    last_tight_k = int(tight[-1]) if len(tight) else None
    if mu_t is not None:
        dual_tol = 1e-8 * max(1.0, float(np.max(mu_t, initial=0.0)))
        active = np.flatnonzero(mu_t > dual_tol)
    else:
        active = np.flatnonzero(solution.temp[1:] >= p.t_max - temp_tol)
    last_active_temp_k = int(active[-1]) + 1 if len(active) else None

    witness = None
    for n, ev in enumerate(evs):
        thr = soc_tightness_threshold(ev, solution.soc[n, 0])
        margin_i = 1e-6 * ev.i_max
        throttled = solution.i[n] < ev.i_max - margin_i
        below = solution.soc[n, 1:] < thr - 1e-6
        loaded = solution.i_total > tol  # theorem needs a loaded transformer
        hits = np.flatnonzero(throttled & below & loaded)
        if len(hits):
            k_w = int(hits[-1])
            if witness is None or k_w > witness[1]:
                witness = (n, k_w)

    if witness is not None:
        k_w = witness[1]
        bad = np.flatnonzero(gaps[: k_w + 1] > tol)
        if len(bad):
            raise CertificationError(
                f"throttled-charger witness at (ev={witness[0]}, k={k_w}) but gap at "
                f"step {int(bad[0])} is {gaps[int(bad[0])]:.3e} > tol={tol:.1e}"
            )
    if last_tight_k is not None and last_active_temp_k is not None:
        if last_active_temp_k != last_tight_k + 1:
            raise CertificationError(
                f"limit-index equivalence violated: last active temperature index "
                f"{last_active_temp_k} != last tight step {last_tight_k} + 1"
            )
    return TightnessReport(
        gaps=gaps,
        last_tight_k=last_tight_k,
        last_active_temp_k=last_active_temp_k,
        theorem1_witness=witness,
        tol=tol,
    )
