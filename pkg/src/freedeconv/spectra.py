"""Deformed random-matrix models and their large-N Stieltjes transforms.

Finite-N draws
    ``C = A + B`` with ``B`` a Wigner matrix of level ``sigma``, and
    ``C = sqrt(A) W sqrt(A)`` with ``W = X X^T / T`` a Wishart matrix of
    ratio ``q = N / T``.

Large-N limit
    The Stieltjes transform of the limiting spectrum of ``C`` solves a
    scalar subordination equation, iterated here to machine precision.

Random numbers come from numpy's Philox-4x64 counter-based generator keyed
by the 64-bit seed. Stream ``k`` is the generator advanced by ``k`` jumps of
``2**128`` draws: stream 0 is the noise matrix, stream 1 the optional
random rotation of ``A``.
"""
from dataclasses import dataclass

import numpy as np

from .eigenmatrix import ContourSamples, SparseMeasure
from .errors import ConvergenceError, DomainError
from .transforms import ADDITIVE, MULTIPLICATIVE, NoiseParameter, Spectrum

__all__ = [
    "SimulationConfig",
    "philox_stream",
    "atom_counts",
    "build_signal_spectrum",
    "wigner_matrix",
    "wishart_matrix",
    "sample_additive_model",
    "sample_multiplicative_model",
    "simulate",
    "limit_stieltjes_additive",
    "limit_stieltjes_multiplicative",
    "limit_stieltjes",
    "limit_support",
    "limit_contour_samples",
    "semicircle_stieltjes",
    "marchenko_pastur_stieltjes",
]

NOISE_STREAM = 0
ROTATION_STREAM = 1


def philox_stream(seed, stream=0):
    """Generator for sub-stream ``stream`` of the Philox sequence keyed by ``seed``."""
    bitgen = np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF)
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


def realized_ratio(N, q):
    """Sample count ``T = round(N / q)`` and the realized ratio ``N / T``."""
    T = int(round(N / q))
    if T < 1:
        raise ValueError(f"q={q} gives fewer than one sample at N={N}")
    return T, N / T


@dataclass(frozen=True)
class SimulationConfig:
    """Inputs of one finite-N draw.

    ``rotate`` conjugates the diagonal signal matrix by a Haar orthogonal
    matrix; the spectral law is unchanged.
    """

    N: int
    seed: int
    measure: SparseMeasure
    noise: NoiseParameter
    rotate: bool = False

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.noise.kind == MULTIPLICATIVE:
            realized_ratio(self.N, self.noise.value)

    @property
    def sample_count(self):
        """``T`` for the multiplicative model, ``None`` otherwise."""
        if self.noise.kind != MULTIPLICATIVE:
            return None
        return realized_ratio(self.N, self.noise.value)[0]

    @property
    def realized_noise(self):
        """Noise level actually simulated (``N / T`` for the Wishart model)."""
        if self.noise.kind == MULTIPLICATIVE:
            return realized_ratio(self.N, self.noise.value)[1]
        return self.noise.value


def atom_counts(measure, N):
    """Integer multiplicities summing to ``N`` by the largest-remainder rule.

    Ties in the fractional remainder go to the lower atom index.
    """
    if N < measure.n:
        raise ValueError(f"N={N} is smaller than the number of atoms {measure.n}")
    exact = measure.weights * N
    counts = np.floor(exact).astype(int)
    remainder = exact - counts
    short = N - counts.sum()
    order = np.lexsort((np.arange(measure.n), -remainder))
    counts[order[:short]] += 1
    zero = np.flatnonzero(counts == 0)
    if zero.size:
        k = int(zero[0])
        raise ValueError(f"atom {k} at x={measure.atoms[k]} gets zero copies at N={N}")
    return counts


def build_signal_spectrum(measure, N):
    """Diagonal signal spectrum with ``N`` eigenvalues distributed per ``measure``."""
    return Spectrum(np.repeat(measure.atoms, atom_counts(measure, N)))


def _signal_matrix(config):
    diag = build_signal_spectrum(config.measure, config.N).eigenvalues
    if not config.rotate:
        return np.diag(diag)
    rng = philox_stream(config.seed, ROTATION_STREAM)
    Q, R = np.linalg.qr(rng.standard_normal((config.N, config.N)))
    Q = Q * np.sign(np.diag(R))
    A = (Q * diag) @ Q.T
    return 0.5 * (A + A.T)


def wigner_matrix(N, sigma, rng):
    """Symmetric Gaussian matrix, off-diagonal variance ``sigma**2/N``, diagonal ``2 sigma**2/N``."""
    G = rng.standard_normal((N, N))
    return (sigma / np.sqrt(2 * N)) * (G + G.T)


def wishart_matrix(N, T, rng):
    """``X X^T / T`` for an ``N x T`` standard Gaussian ``X``."""
    X = rng.standard_normal((N, T))
    W = (X @ X.T) / T
    return 0.5 * (W + W.T)


def sample_additive_model(config, sigma=None):
    """Sorted eigenvalues of ``A + B`` with ``B`` Wigner of level ``sigma``."""
    sigma = config.noise.value if sigma is None else float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0 and not config.rotate:
        return build_signal_spectrum(config.measure, config.N)
    C = _signal_matrix(config)
    if sigma > 0:
        C = C + wigner_matrix(config.N, sigma, philox_stream(config.seed, NOISE_STREAM))
    return Spectrum(np.linalg.eigvalsh(C))


def sample_multiplicative_model(config, q=None):
    """Sorted eigenvalues of ``sqrt(A) W sqrt(A)`` with ``W`` Wishart of ratio ``q``.

    ``T = round(N / q)``; compare estimates against
    :attr:`SimulationConfig.realized_noise`.
    """
    q = config.noise.value if q is None else float(q)
    if np.any(config.measure.atoms <= 0):
        raise DomainError("multiplicative model needs strictly positive atoms")
    T, _ = realized_ratio(config.N, q)
    W = wishart_matrix(config.N, T, philox_stream(config.seed, NOISE_STREAM))
    if config.rotate:
        A = _signal_matrix(config)
        vals, vecs = np.linalg.eigh(A)
        root = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T
        C = root @ W @ root
    else:
        root = np.sqrt(build_signal_spectrum(config.measure, config.N).eigenvalues)
        C = root[:, None] * W * root[None, :]
    return Spectrum(np.linalg.eigvalsh(0.5 * (C + C.T)))


def simulate(config):
    """Draw the spectrum of ``C`` for either model."""
    if config.noise.kind == ADDITIVE:
        return sample_additive_model(config)
    return sample_multiplicative_model(config)


def _solve_fixed_point(F, dF, start, tol=1e-13, max_iter=10_000):
    """Solve ``g = F(g)`` from ``start`` on the branch where ``Im g`` keeps its sign.

    Each step tries Newton on ``g - F(g)`` and falls back to the damped update
    ``g <- (1 - alpha) g + alpha F(g)`` (``alpha`` halved on oscillation) when
    Newton leaves the half-plane or does not reduce the residual.
    """
    g = start
    side = np.sign(start.imag)
    alpha = 0.5
    Fg = F(g)
    res = abs(Fg - g)
    prev = np.inf
    for _ in range(max_iter):
        if res <= tol * max(1.0, abs(Fg)):
            return Fg
        denom = 1.0 - dF(g)
        if denom != 0:
            trial = g - (g - Fg) / denom
            if np.sign(trial.imag) == side:
                F_trial = F(trial)
                res_trial = abs(F_trial - trial)
                if res_trial < res:
                    g, Fg, prev, res = trial, F_trial, res, res_trial
                    continue
        if res > prev:
            alpha = max(alpha / 2, 1.0 / 1024)
        g = (1 - alpha) * g + alpha * Fg
        Fg = F(g)
        prev, res = res, abs(Fg - g)
    raise ConvergenceError(f"fixed point at start={start} did not converge (residual {res:.2e})",
                           stage="oracle")


def _map_points(fn, z):
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        return fn(complex(z))
    return np.array([fn(complex(v)) for v in z.ravel()]).reshape(z.shape)


def limit_stieltjes_additive(measure, sigma, z, tol=1e-13, max_iter=10_000):
    """Large-N Stieltjes transform of ``mu_A`` free-convolved with a semicircle.

    Solves ``g = sum_k w_k / (z - sigma**2 g - x_k)`` by safeguarded fixed-point
    iteration from ``g = 1/z``.
    """
    x, w = measure.atoms, measure.weights
    s2 = float(sigma) ** 2

    def one(zz):
        if s2 == 0:
            return complex(np.sum(w / (zz - x)))
        F = lambda g: np.sum(w / (zz - s2 * g - x))  # noqa: E731
        dF = lambda g: s2 * np.sum(w / (zz - s2 * g - x) ** 2)  # noqa: E731
        return _solve_fixed_point(F, dF, 1.0 / zz, tol, max_iter)

    return _map_points(one, z)


def limit_stieltjes_multiplicative(measure, q, z, tol=1e-13, max_iter=10_000):
    """Large-N Stieltjes transform of ``mu_A`` free-multiplied with Marchenko-Pastur.

    Solves ``g = sum_k w_k / (z - x_k (1 - q + q z g))``.
    """
    x, w = measure.atoms, measure.weights
    if np.any(x <= 0):
        raise DomainError("multiplicative model needs strictly positive atoms")
    q = float(q)

    def residual(zz, g):
        return abs(g - np.sum(w / (zz - x * (1 - q + q * zz * g))))

    def one(zz):
        if q == 0:
            return complex(np.sum(w / (zz - x)))
        # iterate on the companion transform h = -(1 - q)/z - q g, whose update
        # maps each half-plane into itself; the fixed point in g is the same
        def F(h):
            return -1.0 / (zz - q * np.sum(w * x / (1 + x * h)))

        def dF(h):
            return F(h) ** 2 * q * np.sum(w * x**2 / (1 + x * h) ** 2)

        h = _solve_fixed_point(F, dF, -1.0 / zz, 0.1 * tol, max_iter)
        g = -(h + (1 - q) / zz) / q
        res = residual(zz, g)
        if res > tol:
            # polish in g; the companion solution is already on the right branch
            for _ in range(100):
                g = np.sum(w / (zz - x * (1 - q + q * zz * g)))
                res = residual(zz, g)
                if res <= tol:
                    break
            else:
                raise ConvergenceError(
                    f"fixed point at z={zz} did not converge (residual {res:.2e})",
                    stage="oracle")
        return complex(g)

    return _map_points(one, z)


def limit_stieltjes(measure, noise, z):
    if noise.kind == ADDITIVE:
        return limit_stieltjes_additive(measure, noise.value, z)
    return limit_stieltjes_multiplicative(measure, noise.value, z)


def limit_support(measure, noise):
    """An interval containing the large-N spectrum of ``C``.

    Uses operator-norm bounds: ``[min x - 2 sigma, max x + 2 sigma]`` for the
    additive model and ``[min x (1 - sqrt q)^2, max x (1 + sqrt q)^2]`` for
    the multiplicative one (lower end zero when ``q > 1``).
    """
    lo, hi = float(measure.atoms[0]), float(measure.atoms[-1])
    if noise.kind == ADDITIVE:
        return lo - 2 * noise.value, hi + 2 * noise.value
    root = np.sqrt(noise.value)
    lower = lo * (1 - root) ** 2 if noise.value <= 1 else 0.0
    return float(lower), float(hi * (1 + root) ** 2)


def limit_contour_samples(measure, noise, contour):
    """Samples of the large-N Stieltjes transform of ``C`` on ``contour``."""
    contour = np.asarray(contour, dtype=complex)
    return ContourSamples(contour, limit_stieltjes(measure, noise, contour))


def _branch_sqrt(z, left, right):
    # sqrt((z - left)(z - right)) with its cut on [left, right], ~ z at infinity
    return np.sqrt(z - left) * np.sqrt(z - right)


def semicircle_stieltjes(z, sigma, center=0.0):
    """Closed-form Stieltjes transform of the semicircle of radius ``2 sigma``."""
    z = np.asarray(z, dtype=complex) - center
    root = _branch_sqrt(z, -2 * sigma, 2 * sigma)
    return (z - root) / (2 * sigma**2)


def marchenko_pastur_stieltjes(z, q):
    """Closed-form Stieltjes transform of the Marchenko-Pastur law of ratio ``q``.

    Root of ``q z g**2 - (z + q - 1) g + 1 = 0`` on the physical branch.
    """
    z = np.asarray(z, dtype=complex)
    lo, hi = (1 - np.sqrt(q)) ** 2, (1 + np.sqrt(q)) ** 2
    root = _branch_sqrt(z, lo, hi)
    return (z + q - 1 - root) / (2 * q * z)
