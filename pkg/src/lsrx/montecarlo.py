"""Finite-system sampling and empirical SINR measurement.

Serves as the verification oracle for the asymptotic modules: builds concrete
(H, S, A) systems for the three reference channel families, forms the exact
MMSE filter and the windowed adaptive LS filter, and measures their SINR
analytically over the data/noise ensemble (quadratic forms in the realized
filter, no symbol counting).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .als import AlsParams, als_transient_sinr, solve_als_first, solve_als_second
from .distributions import ScalarDistribution, WindowSpec
from .errors import DomainError
from .mmse import MmseParams, mmse_sinr, solve_mmse

__all__ = [
    "FiniteSystem",
    "ChannelPreset",
    "TrialConfig",
    "SinrReport",
    "TrialStreams",
    "trial_streams",
    "sample_haar_columns",
    "sample_iid_matrix",
    "build_system",
    "mmse_filter_empirical",
    "als_filter_empirical",
    "empirical_stieltjes",
    "run_trials",
    "asymptotic_reference",
]

_EIG_DIM_LIMIT = 1024

_ROLE_IDS = {"channel": 0, "signatures": 1, "training": 2, "noise": 3, "data": 4}


@dataclass
class TrialStreams:
    """Independent per-role random generators for one trial.

    Streams are keyed by (seed, trial, role) through SeedSequence so that
    draws are reproducible and independent of evaluation order.
    """

    seed: int
    trial: int

    def role(self, name):
        entropy = [int(self.seed) & (2**64 - 1), int(self.trial), _ROLE_IDS[name]]
        return np.random.default_rng(np.random.SeedSequence(entropy=entropy))


def trial_streams(seed, trial):
    return TrialStreams(seed=seed, trial=trial)


@dataclass(frozen=True)
class ChannelPreset:
    """One of the reference channel families.

    rich_mimo: identity channel, i.i.d. precoding (flat MIMO).
    cdma_rayleigh: square diagonal channel whose squared gains are unit-mean
    exponential (frequency-selective Rayleigh fading).
    fir_cyclic: circulant single-stream channel built from the given taps
    (cyclic-prefix equalization); maps to isometric precoding with
    alpha = beta = 1 and the tap DFT power spectrum as channel law.
    """

    kind: str
    taps: tuple = ()

    @classmethod
    def rich_mimo(cls):
        return cls(kind="rich_mimo")

    @classmethod
    def cdma_rayleigh(cls):
        return cls(kind="cdma_rayleigh")

    @classmethod
    def fir_cyclic(cls, taps):
        taps = tuple(complex(t) for t in taps)
        if not taps:
            raise DomainError("fir_cyclic needs at least one tap")
        return cls(kind="fir_cyclic", taps=taps)

    @classmethod
    def proakis_c(cls):
        return cls.fir_cyclic([0.227, 0.46, 0.688, 0.46, 0.227])


@dataclass(frozen=True)
class TrialConfig:
    """Everything needed to draw and measure one batch of finite systems."""

    preset: ChannelPreset
    n: int
    alpha: float
    beta: float
    eta: float
    sigma2: float
    mu: float = 0.0
    window: WindowSpec = field(default_factory=WindowSpec.rectangular)
    s_type: str = "iid"
    b_type: str = "iid"
    mode: str = "training"
    receiver: str = "mmse"
    trials: int = 1
    seed: int = 0
    modulation: str = "qpsk"

    def dims(self):
        if self.preset.kind == "fir_cyclic":
            n = self.n
            return n, n, n, max(1, round(self.eta * n))
        n = self.n
        m = max(1, round(self.beta * n))
        k = max(1, round(self.alpha * n))
        i = max(1, round(self.eta * n))
        return n, m, k, i


@dataclass(frozen=True)
class FiniteSystem:
    """A concrete channel/precoder/training draw plus receiver knobs."""

    n: int
    m: int
    k: int
    i: int
    h: np.ndarray
    s: np.ndarray
    a: np.ndarray
    sigma2: float
    weights: np.ndarray
    mu: float
    b: np.ndarray
    b_type: str = "iid"
    mode: str = "training"

    @property
    def eta(self):
        return self.i / self.n


def sample_haar_columns(n, k, rng):
    """k orthonormal columns of an n x n Haar unitary.

    QR of a complex Ginibre matrix with the R-diagonal phases absorbed, which
    makes the factor exactly Haar rather than merely orthonormal.
    """
    if k > n:
        raise DomainError("cannot extract more orthonormal columns than rows")
    x = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2.0)
    q, r = np.linalg.qr(x)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_iid_matrix(n, k, rng, entry_law="gaussian"):
    """n x k matrix with i.i.d. zero-mean entries of variance 1/n."""
    if entry_law == "gaussian":
        x = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        return x / np.sqrt(2.0 * n)
    if entry_law == "qpsk_scaled":
        re = rng.integers(0, 2, size=(n, k)) * 2 - 1
        im = rng.integers(0, 2, size=(n, k)) * 2 - 1
        return (re + 1j * im) / np.sqrt(2.0 * n)
    raise DomainError("entry_law must be 'gaussian' or 'qpsk_scaled'")


def _unit_symbols(n, k, rng, modulation):
    if modulation == "qpsk":
        re = rng.integers(0, 2, size=(n, k)) * 2 - 1
        im = rng.integers(0, 2, size=(n, k)) * 2 - 1
        return (re + 1j * im) / np.sqrt(2.0)
    if modulation == "gaussian":
        return (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2.0)
    raise DomainError("modulation must be 'qpsk' or 'gaussian'")


def _window_weights(window, i, eta):
    if window.shape == "rectangular":
        return np.ones(i)
    if window.shape == "exponential":
        eps = 1.0 - eta / (window.lbar * i)
        if not (0.0 < eps <= 1.0):
            raise DomainError("window too short for this system size")
        return eps ** (i - 1.0 - np.arange(i))
    raise DomainError("finite systems support rectangular or exponential windows")


def _training_matrix(i, k, rng, b_type, modulation):
    if b_type == "iid":
        return _unit_symbols(i, k, rng, modulation)
    if k < i:
        return np.sqrt(i) * sample_haar_columns(i, k, rng)
    if k > i:
        return np.sqrt(k) * sample_haar_columns(k, i, rng).conj().T
    return np.sqrt(i) * sample_haar_columns(i, i, rng)


def build_system(config, streams):
    """Draw a fully populated finite system for one trial."""
    n, m, k, i = config.dims()
    ch_rng = streams.role("channel")
    sig_rng = streams.role("signatures")
    tr_rng = streams.role("training")

    kind = config.preset.kind
    if kind == "rich_mimo":
        h = np.eye(m, n, dtype=complex)
        s = sample_iid_matrix(n, k, sig_rng, "gaussian")
    elif kind == "cdma_rayleigh":
        gains = np.sqrt(ch_rng.exponential(1.0, size=min(m, n)))
        phases = np.exp(2j * np.pi * ch_rng.random(min(m, n)))
        h = np.zeros((m, n), dtype=complex)
        np.fill_diagonal(h, gains * phases)
        if config.s_type == "isometric":
            s = sample_haar_columns(n, k, sig_rng)
        else:
            s = sample_iid_matrix(n, k, sig_rng, "qpsk_scaled")
    elif kind == "fir_cyclic":
        taps = np.zeros(n, dtype=complex)
        taps[: len(config.preset.taps)] = config.preset.taps
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        h = taps[idx]
        s = np.eye(n, dtype=complex)
    else:
        raise DomainError(f"unknown preset {kind!r}")

    a = np.ones(k)
    b = _training_matrix(i, k, tr_rng, config.b_type, config.modulation)
    w = _window_weights(config.window, i, i / n)
    return FiniteSystem(n=n, m=m, k=k, i=i, h=h, s=s, a=a, sigma2=config.sigma2,
                        weights=w, mu=config.mu, b=b, b_type=config.b_type,
                        mode=config.mode)


def _ensemble_sinr(sys, filters):
    """SINR of the given per-stream filters over the data/noise ensemble."""
    hs = sys.h @ sys.s
    cov = (hs * sys.a**2) @ hs.conj().T + sys.sigma2 * np.eye(sys.m)
    cross = filters.conj().T @ hs  # filters[:, k]^H h_j
    num = sys.a**2 * np.abs(np.diagonal(cross)) ** 2
    total = np.einsum("mk,mn,nk->k", filters.conj(), cov, filters).real
    den = total - num
    return num / den


def mmse_filter_empirical(sys):
    """Per-stream SINR of the exact-covariance MMSE filter."""
    if sys.sigma2 <= 0:
        raise DomainError("MMSE filter needs sigma2 > 0")
    hs = sys.h @ sys.s
    cov = (hs * sys.a**2) @ hs.conj().T + sys.sigma2 * np.eye(sys.m)
    filters = np.linalg.solve(cov, hs)
    return _ensemble_sinr(sys, filters)


def als_filter_empirical(sys, rng):
    """Per-stream SINR of the adaptive LS filter from one training batch.

    The sample covariance uses the system's training matrix and freshly
    drawn noise; the SINR is then measured against the true ensemble.
    """
    noise = (rng.standard_normal((sys.m, sys.i))
             + 1j * rng.standard_normal((sys.m, sys.i))) * np.sqrt(sys.sigma2 / 2.0)
    script_r = (sys.h @ sys.s * sys.a) @ sys.b.conj().T + noise
    cov_hat = (script_r * sys.weights) @ script_r.conj().T / sys.i
    cov_hat += (sys.mu / sys.eta) * np.eye(sys.m)
    if sys.mode == "training":
        steer = (script_r * sys.weights) @ sys.b / sys.i
    else:
        steer = sys.h @ sys.s
    try:
        filters = np.linalg.solve(cov_hat, steer)
    except np.linalg.LinAlgError:
        raise DomainError(
            "singular sample covariance: add diagonal loading (mu > 0) or "
            "use i >= M training symbols")
    return _ensemble_sinr(sys, filters)


def empirical_stieltjes(matrix, z):
    """(1/M) sum 1/(lambda - z) over the eigenvalues of a Hermitian matrix."""
    matrix = np.asarray(matrix)
    if matrix.shape[0] > _EIG_DIM_LIMIT:
        raise DomainError(f"eigensolves restricted to dimension <= {_EIG_DIM_LIMIT}")
    lam = np.linalg.eigvalsh(matrix)
    return complex(np.mean(1.0 / (lam - z)))


def asymptotic_reference(config):
    """Large-system parameters implied by a preset, and the predicted SINR."""
    n, m, k, i = config.dims()
    if config.preset.kind == "rich_mimo":
        dist_h = ScalarDistribution.point_masses([1.0], [1.0])
        alpha, beta, s_type = k / n, m / n, config.s_type
    elif config.preset.kind == "cdma_rayleigh":
        dist_h = ScalarDistribution.exponential(1.0)
        alpha, beta, s_type = k / n, m / n, config.s_type
    else:
        spectrum = np.abs(np.fft.fft(np.asarray(config.preset.taps, dtype=complex), n)) ** 2
        dist_h = ScalarDistribution.empirical(spectrum)
        alpha, beta, s_type = 1.0, 1.0, "isometric"
    dist_p = ScalarDistribution.point_masses([1.0], [1.0])

    if config.receiver == "mmse":
        params = MmseParams(alpha, beta, config.sigma2, dist_p, dist_h, s_type)
        return params, mmse_sinr(solve_mmse(params), 1.0)
    params = AlsParams(alpha=alpha, beta=beta, eta=i / n, sigma2=config.sigma2,
                       mu=config.mu, dist_p=dist_p, dist_h=dist_h,
                       window=config.window, s_type=s_type, b_type=config.b_type,
                       mode=config.mode)
    first = solve_als_first(params)
    second = solve_als_second(params, first)
    return params, als_transient_sinr(params, first, second, 1.0).sinr


@dataclass(frozen=True)
class SinrReport:
    """Empirical per-stream SINR with the matching asymptotic prediction."""

    per_stream: np.ndarray  # trials x K, linear scale
    mean_sinr: float
    stderr: float
    asymptotic_sinr: float
    receiver: str
    seed: int
    trials: int
    version: str

    @property
    def mean_sinr_db(self):
        return 10.0 * np.log10(self.mean_sinr)

    @property
    def asymptotic_sinr_db(self):
        return 10.0 * np.log10(self.asymptotic_sinr)


def run_trials(config, threads=1):
    """Draw `trials` systems and measure the configured receiver on each.

    Deterministic for a fixed (seed, config) regardless of thread count:
    every trial owns independent role-keyed streams and results are reduced
    in trial order.
    """
    if config.trials < 1:
        raise DomainError("trials must be >= 1")
    _, reference = asymptotic_reference(config)

    def one(trial):
        streams = trial_streams(config.seed, trial)
        sys = build_system(config, streams)
        if config.receiver == "mmse":
            return mmse_filter_empirical(sys)
        return als_filter_empirical(sys, streams.role("noise"))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(config.trials)))
    else:
        rows = [one(t) for t in range(config.trials)]
    per_stream = np.vstack(rows)
    trial_means = per_stream.mean(axis=1)
    return SinrReport(
        per_stream=per_stream,
        mean_sinr=float(per_stream.mean()),
        stderr=float(trial_means.std(ddof=1) / np.sqrt(config.trials))
        if config.trials > 1 else 0.0,
        asymptotic_sinr=float(reference),
        receiver=config.receiver,
        seed=config.seed,
        trials=config.trials,
        version=__version__,
    )
