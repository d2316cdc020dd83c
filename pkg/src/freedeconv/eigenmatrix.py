"""Sparse recovery of a discrete measure from unstructured Cauchy samples.

Given samples ``u_j ~ sum_k w_k / (z_j - x_k)`` at arbitrary complex points
``z_j``, the atoms ``x_k`` and weights ``w_k`` are recovered in four steps:

1. build an *eigenmatrix* ``M`` whose approximate eigenpairs are
   ``(x, b_x / |b_x|)`` for every ``x`` in a search interval, where
   ``b_x = [1 / (z_j - x)]_j``;
2. stack the Krylov matrix ``T = [u, Mu, ..., M^{n_l} u]``;
3. read the atoms off a shift-invariance (ESPRIT) step on the leading
   right singular vectors of ``T``;
4. fit the weights by linear least squares.

Internally ``M`` acts on the search interval mapped affinely onto
``[-1, 1]``. The Krylov subspace is unchanged by the map, and the norm cap
becomes independent of the units of the spectrum.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RecoveryError

__all__ = [
    "SparseMeasure",
    "ContourSamples",
    "EigenmatrixConfig",
    "EigenmatrixOperator",
    "KrylovDiagnostics",
    "cauchy_kernel",
    "chebyshev_nodes",
    "build_eigenmatrix",
    "build_krylov",
    "esprit_eigenvalues",
    "esprit_locations",
    "solve_weights",
    "recover_measure",
]

MAX_CHEBYSHEV_NODES = 4096


@dataclass(frozen=True)
class SparseMeasure:
    """Discrete probability measure ``sum_k w_k delta(x - x_k)``.

    Atoms are strictly increasing and weights sum to one. Weights may be
    zero for recovered measures, where negative least-squares weights are
    clipped.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.size == 0 or atoms.size != weights.size:
            raise ValueError("atoms and weights must be non-empty and of equal length")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms and weights must be finite")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be strictly increasing")
        if np.any(weights < 0):
            raise ValueError("weights must be non-negative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self):
        return self.atoms.size

    def stieltjes(self, z):
        """Evaluate ``sum_k w_k / (z - x_k)`` at scalar or array ``z``."""
        z = np.asarray(z, dtype=complex)
        return np.sum(self.weights / (z[..., None] - self.atoms), axis=-1)

    def to_dict(self):
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(atoms=data["atoms"], weights=data["weights"])

    @classmethod
    def normalized(cls, atoms, weights):
        """Build a measure after sorting atoms and rescaling weights to mass one."""
        atoms = np.asarray(atoms, dtype=float)
        weights = np.asarray(weights, dtype=float)
        order = np.argsort(atoms)
        weights = weights[order]
        return cls(atoms[order], weights / weights.sum())


@dataclass(frozen=True)
class ContourSamples:
    """Paired sample locations ``points`` and observations ``values``."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=complex).ravel()
        values = np.asarray(self.values, dtype=complex).ravel()
        if points.size != values.size:
            raise ValueError("points and values must have equal length")
        if points.size < 2:
            raise ValueError("need at least two samples")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(values))):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.points.size

    def permuted(self, order):
        order = np.asarray(order)
        return ContourSamples(self.points[order], self.values[order])

    def conjugated(self):
        return ContourSamples(self.points.conj(), self.values.conj())

    def is_conjugate_symmetric(self, rtol=1e-10):
        """True when the sample set is closed under complex conjugation.

        Each point must have a partner at its conjugate whose value is the
        conjugate of its own value, to relative tolerance ``rtol``.
        """
        scale = max(np.max(np.abs(self.points)), 1.0)
        vscale = max(np.max(np.abs(self.values)), np.finfo(float).tiny)
        for p, v in zip(self.points, self.values):
            dist = np.abs(self.points - np.conj(p))
            j = int(np.argmin(dist))
            if dist[j] > rtol * scale:
                return False
            if abs(self.values[j] - np.conj(v)) > rtol * vscale:
                return False
        return True


@dataclass(frozen=True)
class EigenmatrixConfig:
    """Solver knobs for the eigenmatrix recovery.

    ``n_c`` and ``n_l`` may be left as ``None``; they then resolve to
    ``4 * n_z`` Chebyshev nodes and a Krylov depth of ``max(2n, n + 8)``
    (capped at ``n_z - 1``).
    """

    interval: tuple
    n_c: int = None
    n_l: int = None
    norm_cap: float = 10.0
    svd_floor: float = 1e-12

    def __post_init__(self):
        lo, hi = (float(v) for v in self.interval)
        object.__setattr__(self, "interval", (lo, hi))
        if not lo < hi:
            raise ValueError(f"interval must satisfy lo < hi, got {self.interval}")
        if self.n_c is not None and self.n_c < 2:
            raise ValueError("n_c must be at least 2")
        if self.n_l is not None and self.n_l < 1:
            raise ValueError("n_l must be at least 1")
        if not self.norm_cap > 1:
            raise ValueError("norm_cap must exceed 1")
        if not 0 < self.svd_floor < 1:
            raise ValueError("svd_floor must lie in (0, 1)")

    def resolve_n_c(self, n_z):
        if self.n_c is not None:
            return int(self.n_c)
        return int(min(4 * n_z, MAX_CHEBYSHEV_NODES))

    def resolve_n_l(self, n, n_z):
        if self.n_l is not None:
            return int(self.n_l)
        return int(max(min(max(2 * n, n + 8), n_z - 1), 1))

    def replace(self, **changes):
        params = dict(interval=self.interval, n_c=self.n_c, n_l=self.n_l,
                      norm_cap=self.norm_cap, svd_floor=self.svd_floor)
        params.update(changes)
        return EigenmatrixConfig(**params)


@dataclass(frozen=True)
class EigenmatrixOperator:
    """The eigenmatrix together with its build diagnostics.

    ``matrix`` acts on the normalized variable ``(x - center) / half_width``.
    ``eigen_residual`` is ``max_t |M bh_t - c_t bh_t|`` in that variable,
    and ``truncation_level`` is the smallest singular value of the node
    basis kept by the pseudoinverse, relative to the largest.
    """

    matrix: np.ndarray
    chebyshev_nodes: np.ndarray
    eigen_residual: float
    operator_norm: float
    rank_kept: int
    center: float
    half_width: float
    truncation_level: float = 0.0

    @property
    def interval(self):
        return (self.center - self.half_width, self.center + self.half_width)

    def to_unit(self, x):
        return (np.asarray(x) - self.center) / self.half_width

    def from_unit(self, y):
        return self.center + self.half_width * np.asarray(y)


@dataclass(frozen=True)
class KrylovDiagnostics:
    """Singular values of the Krylov matrix and recovery quality flags."""

    singular_values: np.ndarray
    n_used: int = None
    max_imag: float = 0.0
    weight_residual: float = float("nan")
    eigen_residual: float = float("nan")
    rank_kept: int = 0
    truncation_level: float = float("nan")

    def to_dict(self):
        return {
            "singular_values": [float(s) for s in self.singular_values],
            "n_used": self.n_used,
            "max_imag": float(self.max_imag),
            "weight_residual": float(self.weight_residual),
            "eigen_residual": float(self.eigen_residual),
            "rank_kept": int(self.rank_kept),
            "truncation_level": float(self.truncation_level),
        }


def cauchy_kernel(z, x):
    """Return ``1 / (z - x)``.

    Raises
    ------
    DomainError
        If ``z == x``.
    """
    diff = np.asarray(z, dtype=complex) - np.asarray(x, dtype=float)
    if np.any(diff == 0):
        raise DomainError("Cauchy kernel pole: z coincides with x")
    out = 1.0 / diff
    return complex(out) if out.ndim == 0 else out


def chebyshev_nodes(lo, hi, n):
    """Chebyshev points of the first kind on ``[lo, hi]``, increasing."""
    if n < 2:
        raise ValueError("need at least two Chebyshev nodes")
    k = np.arange(n)
    unit = -np.cos(np.pi * (2 * k + 1) / (2 * n))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * unit


def _normalized_basis(points, nodes):
    basis = 1.0 / (points[:, None] - nodes[None, :])
    return basis / np.linalg.norm(basis, axis=0)


def build_eigenmatrix(points, config):
    """Construct ``M = B Lambda B^+`` with a norm-capped pseudoinverse.

    The columns of ``B`` are the normalized kernel vectors at the Chebyshev
    nodes of ``config.interval``. The pseudoinverse keeps the largest rank
    whose resulting ``M`` has spectral norm at most ``config.norm_cap``,
    searching downward from the rank allowed by ``config.svd_floor``.

    Parameters
    ----------
    points : array_like of complex
        Sample locations, none on the real search interval.
    config : EigenmatrixConfig

    Returns
    -------
    EigenmatrixOperator
    """
    points = np.asarray(points, dtype=complex).ravel()
    n_z = points.size
    if n_z < 2:
        raise ValueError("need at least two sample points")
    lo, hi = config.interval
    on_axis = (points.imag == 0) & (points.real >= lo) & (points.real <= hi)
    if np.any(on_axis):
        j = int(np.flatnonzero(on_axis)[0])
        raise DomainError(f"sample point {j} ({points[j]}) lies on the search interval")

    n_c = config.resolve_n_c(n_z)
    nodes = chebyshev_nodes(lo, hi, n_c)
    gap = np.min(np.abs(points[:, None] - nodes[None, :]))
    if gap <= 16 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
        raise RecoveryError("a Chebyshev node coincides with a sample point", stage="eigenmatrix")

    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    unit_points = (points - center) / half
    unit_nodes = (nodes - center) / half

    basis = _normalized_basis(unit_points, unit_nodes)
    scaled = basis * unit_nodes[None, :]
    U, s, Vh = np.linalg.svd(basis, full_matrices=False)
    # B Lambda V, reused for every candidate rank
    image = scaled @ Vh.conj().T
    max_rank = int(np.sum(s >= config.svd_floor * s[0]))

    for rank in range(max_rank, 0, -1):
        matrix = (image[:, :rank] / s[:rank]) @ U[:, :rank].conj().T
        norm = np.linalg.norm(matrix, 2)
        if norm <= config.norm_cap:
            break
    else:
        raise RecoveryError(
            f"no truncation satisfies |M| <= {config.norm_cap} (rank-1 norm {norm:.3g})",
            stage="eigenmatrix",
        )

    residual = np.max(np.linalg.norm(matrix @ basis - scaled, axis=0))
    truncation = float(s[rank - 1] / s[0])
    return EigenmatrixOperator(
        matrix=matrix,
        chebyshev_nodes=nodes,
        eigen_residual=float(residual),
        operator_norm=float(norm),
        rank_kept=rank,
        center=center,
        half_width=half,
        truncation_level=truncation,
    )


def build_krylov(op, values, n_l, n=None):
    """Stack ``[u, Mu, ..., M^{n_l} u]`` by repeated application of ``M``.

    Returns the matrix and its :class:`KrylovDiagnostics`.
    """
    u = np.asarray(values, dtype=complex).ravel()
    matrix = op.matrix if isinstance(op, EigenmatrixOperator) else np.asarray(op)
    if u.size != matrix.shape[0]:
        raise ValueError(f"values have length {u.size}, operator expects {matrix.shape[0]}")
    if n_l < 1:
        raise ValueError("n_l must be at least 1")
    T = np.empty((u.size, n_l + 1), dtype=complex)
    T[:, 0] = u
    for k in range(1, n_l + 1):
        T[:, k] = matrix @ T[:, k - 1]
    sv = np.linalg.svd(T, compute_uv=False)
    return T, KrylovDiagnostics(singular_values=sv, n_used=n)


def _numerical_rank(s, shape):
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > s[0] * max(shape) * np.finfo(float).eps))


def esprit_eigenvalues(T, n, interval):
    """Complex ESPRIT eigenvalues of ``T``, mapped back to ``interval`` units."""
    T = np.asarray(T, dtype=complex)
    n_l = T.shape[1] - 1
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > min(T.shape[0], n_l):
        raise ValueError(f"n={n} exceeds min(n_z, n_l)={min(T.shape[0], n_l)}")
    _, s, Vh = np.linalg.svd(T, full_matrices=False)
    rank = _numerical_rank(s, T.shape)
    if rank < n:
        raise RecoveryError(
            f"Krylov matrix has numerical rank {rank}, fewer than n={n}", stage="esprit"
        )
    V = Vh[:n]
    low, high = V[:, :-1], V[:, 1:]
    shift = high @ np.linalg.pinv(low)
    eig = np.linalg.eigvals(shift)
    lo, hi = interval
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * eig


def esprit_locations(T, n, interval):
    """Atom locations from the rank-``n`` shift structure of ``T``.

    Real parts of the ESPRIT eigenvalues, clamped into ``interval`` and sorted.
    ``T`` must come from :func:`build_krylov` on an operator built for the
    same interval.
    """
    eig = esprit_eigenvalues(T, n, interval)
    lo, hi = interval
    return np.sort(np.clip(eig.real, lo, hi))


def solve_weights(samples, atoms):
    """Least-squares weights for fixed atoms.

    Returns
    -------
    weights : ndarray
        Real parts of the complex least-squares solution, negatives clipped
        to zero, rescaled to total mass one.
    residual : float
        Norm of the complex residual before post-processing.
    """
    atoms = np.asarray(atoms, dtype=float).ravel()
    if atoms.size > 1 and np.any(np.diff(np.sort(atoms)) == 0):
        raise RecoveryError("atoms are not distinct", stage="weights")
    design = 1.0 / (samples.points[:, None] - atoms[None, :])
    s = np.linalg.svd(design, compute_uv=False)
    if s[-1] <= s[0] * max(design.shape) * np.finfo(float).eps:
        raise RecoveryError("Cauchy design matrix is numerically rank deficient", stage="weights")
    coef, *_ = np.linalg.lstsq(design, samples.values, rcond=None)
    residual = float(np.linalg.norm(design @ coef - samples.values))
    weights = np.clip(coef.real, 0.0, None)
    total = weights.sum()
    if not total > 0:
        raise RecoveryError("all fitted weights are non-positive", stage="weights")
    return weights / total, residual


def recover_measure(samples, n, config):
    """Recover an ``n``-atom measure from Cauchy samples.

    Runs :func:`build_eigenmatrix`, :func:`build_krylov`, the ESPRIT step and
    :func:`solve_weights`. Failures are re-raised as :class:`RecoveryError`
    tagged with the stage name.

    Returns
    -------
    measure : SparseMeasure
    diagnostics : KrylovDiagnostics
    """
    n_z = len(samples)
    try:
        op = build_eigenmatrix(samples.points, config)
    except (DomainError, np.linalg.LinAlgError) as exc:
        raise RecoveryError(str(exc), stage="eigenmatrix") from exc
    n_l = config.resolve_n_l(n, n_z)
    T, diag = build_krylov(op, samples.values, n_l, n=n)
    try:
        eig = esprit_eigenvalues(T, n, config.interval)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise RecoveryError(str(exc), stage="esprit") from exc
    lo, hi = config.interval
    atoms = np.sort(np.clip(eig.real, lo, hi))
    try:
        weights, residual = solve_weights(samples, atoms)
        measure = SparseMeasure(atoms, weights)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise RecoveryError(str(exc), stage="weights") from exc
    diag = KrylovDiagnostics(
        singular_values=diag.singular_values,
        n_used=n,
        max_imag=float(np.max(np.abs(eig.imag))),
        weight_residual=residual,
        eigen_residual=op.eigen_residual,
        rank_kept=op.rank_kept,
        truncation_level=op.truncation_level,
    )
    return measure, diag
