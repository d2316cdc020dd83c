"""Noise-level estimation by rank collapse of the Krylov matrix.

At the true noise level the pivoted samples come from an ``n``-atom measure,
so the Krylov matrix ``T`` has numerical rank ``n``. The estimate minimizes
``log s_{n+1}(T)`` over the noise level: a coarse grid search followed by a
golden-section refinement around the best grid point.

Candidates whose rank-``n`` ESPRIT step returns a complex-conjugate pair of
atoms, or atoms outside the search interval, do not describe a measure on
that interval. The search skips them by default (``require_feasible_atoms``);
their singular values are still kept in the landscape.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .eigenmatrix import build_eigenmatrix, build_krylov, esprit_eigenvalues
from .errors import ConvergenceError, DomainError, RecoveryError
from .transforms import ADDITIVE, MULTIPLICATIVE, additive_pivot, multiplicative_pivot

__all__ = [
    "CandidateEvaluation",
    "LossLandscape",
    "NoiseEstimate",
    "default_search_range",
    "pivot_samples",
    "evaluate_candidate",
    "loss",
    "grid_search",
    "refine",
    "estimate_noise",
]

INV_PHI = (math.sqrt(5) - 1) / 2
IMAG_TOL = 1e-6
EDGE_TOL = 1e-9
STATUS_OK = "ok"


@dataclass(frozen=True)
class CandidateEvaluation:
    """Loss and singular values of ``T`` at one candidate noise level."""

    parameter: float
    loss: float
    singular_values: np.ndarray = None
    max_imag: float = float("nan")
    status: str = STATUS_OK

    @property
    def ok(self):
        return self.status == STATUS_OK


@dataclass(frozen=True)
class LossLandscape:
    """``log s_i(T)`` over a grid of candidate noise levels.

    ``full_curves[i, j]`` is the log of the ``(i+1)``-th singular value at
    ``parameter_grid[j]``. ``loss_values`` is NaN where the point was
    skipped, with the reason in ``status``.
    """

    parameter_grid: np.ndarray
    loss_values: np.ndarray
    full_curves: np.ndarray
    status: tuple

    @property
    def valid(self):
        return np.array([s == STATUS_OK for s in self.status])

    def argmin(self):
        vals = np.where(self.valid, self.loss_values, np.inf)
        return int(np.argmin(vals))

    def to_dict(self):
        return {
            "parameter_grid": self.parameter_grid.tolist(),
            "loss_values": [None if not np.isfinite(v) else float(v) for v in self.loss_values],
            "full_curves": [[None if not np.isfinite(v) else float(v) for v in row]
                            for row in self.full_curves],
            "status": list(self.status),
        }


@dataclass(frozen=True)
class NoiseEstimate:
    kind: str
    estimate: float
    initial_guess: float
    loss_at_estimate: float
    landscape: LossLandscape
    refine_iterations: int
    search_range: tuple

    def to_dict(self):
        return {
            "kind": self.kind,
            "estimate": float(self.estimate),
            "initial_guess": float(self.initial_guess),
            "loss_at_estimate": float(self.loss_at_estimate),
            "refine_iterations": int(self.refine_iterations),
            "search_range": [float(v) for v in self.search_range],
            "landscape": self.landscape.to_dict(),
        }


def default_search_range(kind, interval):
    """``[0.02 W, W]`` for sigma with ``W`` the half-width of ``interval``; ``[0.01, 1.5]`` for q."""
    if kind == ADDITIVE:
        half = 0.5 * (interval[1] - interval[0])
        return 0.02 * half, 1.0 * half
    if kind == MULTIPLICATIVE:
        return 0.01, 1.5
    raise ValueError(f"unknown noise kind {kind!r}")


def pivot_samples(samples, kind, value):
    if kind == ADDITIVE:
        return additive_pivot(samples.points, samples.values, value)
    if kind == MULTIPLICATIVE:
        return multiplicative_pivot(samples.points, samples.values, value)
    raise ValueError(f"unknown noise kind {kind!r}")


def _check_order(n, n_z, n_l):
    if n < 1 or n + 1 > min(n_z, n_l + 1):
        raise ValueError(
            f"n + 1 = {n + 1} exceeds the number of singular values of T "
            f"(min(n_z, n_l + 1) = {min(n_z, n_l + 1)})")


def evaluate_candidate(noise_value, kind, samples, n, config, imag_tol=IMAG_TOL):
    """Pivot, rebuild the eigenmatrix and measure the rank collapse of ``T``.

    Pivot and build failures do not raise; they are returned with a NaN loss
    and a ``status`` naming the failing stage. A point whose ESPRIT atoms
    carry an imaginary part above ``imag_tol`` (in units of the interval
    half-width), or fall outside the interval, is flagged but keeps its loss.
    """
    n_z = len(samples)
    n_l = config.resolve_n_l(n, n_z)
    _check_order(n, n_z, n_l)
    try:
        pivoted = pivot_samples(samples, kind, noise_value)
        op = build_eigenmatrix(pivoted.points, config)
    except (DomainError, RecoveryError, ValueError, np.linalg.LinAlgError) as exc:
        stage = "pivot" if not isinstance(exc, RecoveryError) else exc.stage
        return CandidateEvaluation(float(noise_value), float("nan"), status=f"{stage}: {exc}")
    T, diag = build_krylov(op, pivoted.values, n_l, n=n)
    sv = diag.singular_values
    with np.errstate(divide="ignore"):
        value = float(np.log(sv[n]))
    try:
        eig = esprit_eigenvalues(T, n, config.interval)
    except RecoveryError as exc:
        return CandidateEvaluation(float(noise_value), value, sv, status=f"esprit: {exc}")
    max_imag = float(np.max(np.abs(eig.imag)) / op.half_width)
    unit = np.abs(op.to_unit(eig.real))
    if max_imag > imag_tol:
        status = "non-real atoms"
    elif np.any(unit > 1 + EDGE_TOL):
        status = "atoms outside interval"
    else:
        status = STATUS_OK
    return CandidateEvaluation(float(noise_value), value, sv, max_imag, status)


def loss(noise_value, kind, samples, n, config):
    """``log s_{n+1}(T)`` after pivoting ``samples`` at ``noise_value``.

    Raises
    ------
    RecoveryError
        If the pivot or the eigenmatrix build fails.
    """
    ev = evaluate_candidate(noise_value, kind, samples, n, config)
    if np.isnan(ev.loss):
        raise RecoveryError(ev.status, stage="loss")
    return ev.loss


def _as_evaluation(objective, theta):
    try:
        out = objective(theta)
    except (RecoveryError, DomainError, ConvergenceError) as exc:
        return CandidateEvaluation(float(theta), float("nan"), status=str(exc))
    if isinstance(out, CandidateEvaluation):
        return out
    out = float(out)
    status = STATUS_OK if np.isfinite(out) else "non-finite loss"
    return CandidateEvaluation(float(theta), out, status=status)


def _score(ev):
    return ev.loss if ev.ok and np.isfinite(ev.loss) else np.inf


def grid_search(objective, bounds, n_grid=30, workers=1):
    """Evaluate ``objective`` on ``n_grid`` evenly spaced points of ``bounds``.

    ``objective`` returns a float or a :class:`CandidateEvaluation`. Points
    that raise or are flagged are recorded as missing, never interpolated.
    With ``workers > 1`` points are evaluated on a thread pool; the result
    is identical to the sequential one.

    Returns
    -------
    best : float
        Grid point with the smallest valid loss.
    landscape : LossLandscape
    """
    lo, hi = (float(v) for v in bounds)
    if not hi > lo:
        raise ValueError("search range must have positive length")
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    grid = np.linspace(lo, hi, n_grid)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evals = list(pool.map(lambda t: _as_evaluation(objective, t), grid))
    else:
        evals = [_as_evaluation(objective, t) for t in grid]

    width = max((ev.singular_values.size for ev in evals if ev.singular_values is not None),
                default=1)
    curves = np.full((width, n_grid), np.nan)
    for j, ev in enumerate(evals):
        if ev.singular_values is not None:
            with np.errstate(divide="ignore"):
                curves[: ev.singular_values.size, j] = np.log(ev.singular_values)
    losses = np.array([ev.loss if ev.ok else np.nan for ev in evals])
    landscape = LossLandscape(grid, losses, curves, tuple(ev.status for ev in evals))
    scores = np.array([_score(ev) for ev in evals])
    if not np.any(np.isfinite(scores)):
        raise RecoveryError("every grid point failed", stage="grid_search")
    return float(grid[int(np.argmin(scores))]), landscape


def _golden_section(f, a, b, rtol=1e-4, max_iter=200):
    tol = rtol * (b - a)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    return 0.5 * (a + b), it


def refine(objective, bracket, rtol=1e-4, max_iter=200):
    """Golden-section search inside a bracket ``(a, m, b)``.

    Requires ``a < m < b`` and ``f(m) <= min(f(a), f(b))``. Stops once the
    interval is shorter than ``rtol * (b - a)`` or after ``max_iter``
    iterations; failed or flagged evaluations count as ``+inf``.

    Returns
    -------
    estimate : float
        Midpoint of the final interval.
    iterations : int
    """
    a, m, b = (float(v) for v in bracket)
    f = lambda t: _score(_as_evaluation(objective, t))  # noqa: E731
    if not a < m < b:
        raise ValueError(f"bracket must satisfy a < m < b, got {bracket}")
    fm = f(m)
    if not fm <= min(f(a), f(b)):
        raise ValueError("bracket midpoint is not below both ends")
    return _golden_section(f, a, b, rtol, max_iter)


def estimate_noise(kind, samples, n, config, search_range=None, n_grid=30,
                   workers=1, require_feasible_atoms=True):
    """Two-step estimate of the noise level from Stieltjes samples of the data.

    Parameters
    ----------
    kind : str
        ``ADDITIVE`` (sigma) or ``MULTIPLICATIVE`` (q).
    samples : ContourSamples
        Stieltjes samples of the observed spectrum.
    n : int
        Number of atoms of the signal measure.
    config : EigenmatrixConfig
        Its interval is the hull of the observed spectrum.
    search_range : tuple, optional
        Defaults to :func:`default_search_range`.
    n_grid : int
        Size of the coarse grid.
    require_feasible_atoms : bool
        Skip candidates whose ESPRIT atoms are not real.

    Returns
    -------
    NoiseEstimate
    """
    if search_range is None:
        search_range = default_search_range(kind, config.interval)
    def objective(theta):
        ev = evaluate_candidate(theta, kind, samples, n, config)
        if not require_feasible_atoms and np.isfinite(ev.loss) and ev.singular_values is not None:
            return CandidateEvaluation(ev.parameter, ev.loss, ev.singular_values, ev.max_imag)
        return ev

    _check_order(n, len(samples), config.resolve_n_l(n, len(samples)))
    init, landscape = grid_search(objective, search_range, n_grid, workers)
    grid = landscape.parameter_grid
    i = int(np.flatnonzero(grid == init)[0])
    score = lambda t: _score(objective(t))  # noqa: E731

    if 0 < i < grid.size - 1:
        estimate, iters = refine(objective, (grid[i - 1], grid[i], grid[i + 1]))
    else:
        j = 1 if i == 0 else grid.size - 2
        lo, hi = sorted((grid[i], grid[j]))
        estimate, iters = _golden_section(score, lo, hi)

    best = landscape.loss_values[i]
    value = score(estimate)
    if not value <= best:
        estimate, value = init, best
    return NoiseEstimate(kind, float(estimate), float(init), float(value), landscape,
                         int(iters), tuple(float(v) for v in search_range))
