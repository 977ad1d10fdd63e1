"""Symbol-level downlink chains.

The chains are uncoded by default (the linear code is the identity, so each
symbol is its own codeword). That keeps the finite-field identities exactly
checkable; coding gains are accounted for analytically in :mod:`rcof.rates`.
A generator matrix over Z_p can be plugged in through ``generator``; the
UTs then compare against the codeword of their desired message (no decoder
is run).
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .effective_noise import mmse_alpha
from .errors import RankDeficient, RcofError, SingularChannel
from .integer_search import check_basis, ifbf_coeffs, ifbf_objective
from .rates import Scheme, power_deflation, quantization_noise_variance
from .scalar_lattice import NestedLatticePair
from .zp_field import PrimeField

# generator streams derived from the configuration seed
_MESSAGES, _NOISE, _QUANT = 1, 2, 3


def _rng(seed, purpose):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xC4A1, purpose))))


@dataclass(frozen=True)
class DownlinkConfig:
    L: int
    p: int
    snr: float
    r0: float = math.inf
    scheme: Scheme = Scheme.RQCOF
    seed: int = 0
    n_symbols: int = 10_000

    def __post_init__(self):
        if self.L < 1 or self.n_symbols < 1:
            raise ValueError("L and n_symbols must be at least 1")
        if not self.snr > 0:
            raise ValueError("snr must be positive")


@dataclass
class ChainTrace:
    """Per-symbol intermediate signals, kept on request for white-box checks."""

    w: np.ndarray
    mu: np.ndarray
    c: np.ndarray
    d: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    eps: np.ndarray
    target: np.ndarray
    alpha: np.ndarray
    extra: dict = field(default_factory=dict)


@dataclass
class ChainResult:
    ser: np.ndarray
    error_pmf: np.ndarray
    recovered: bool
    noise_variance: np.ndarray
    tx_power: np.ndarray
    trace: ChainTrace | None = None
    info: dict = field(default_factory=dict)


def _precode_and_modulate(cfg, field_, q, pair, generator):
    g = None if generator is None else field_.matrix(generator)
    k = cfg.n_symbols if g is None else g.shape[0]
    w = _rng(cfg.seed, _MESSAGES).integers(0, cfg.p, size=(cfg.L, k))
    mu = field_.matmul(field_.invert(q), w)
    c = mu if generator is None else field_.matmul(mu, g)
    d = np.stack([pair.dither(c.shape[1], cfg.seed, stream=l) for l in range(cfg.L)])
    x = np.asarray(pair.channel_input(c, d))
    target = w if generator is None else field_.matmul(w, g)
    return w, mu, c, d, x, target


def _receive(pair, y, a, d, x, alpha, target, p):
    u = np.empty(target.shape, dtype=np.int64)
    eps = np.empty(y.shape)
    for l in range(target.shape[0]):
        u[l] = pair.receiver_quantize(y[l], alpha[l], a[l] @ d)
        eps[l] = alpha[l] * y[l] - a[l] @ x
    err = np.mod(u - target, p)
    pmf = np.stack([np.bincount(e, minlength=p) / e.size for e in err])
    return u, eps, err, pmf


def run_rqcof_chain(cfg: DownlinkConfig, h_matrix, a, noiseless=False, generator=None, keep_trace=False):
    """Simulate the reverse QCoF downlink.

    The CP precodes uniform messages with ``Q^-1``, each AT sends
    ``[m(c) + d] mod Lambda_s`` at power ``cfg.snr``, and UT ``l`` quantizes
    ``alpha_l y_l - a_l^T d`` with the MMSE ``alpha_l``. Because
    ``q_l^T Q^-1 w = w_l`` the UT output minus ``w_l`` is exactly the discrete
    effective noise.

    Raises
    ------
    RankDeficient
        If ``[A] mod p`` is singular over Z_p.
    """
    field_ = PrimeField(cfg.p)
    hm = np.asarray(h_matrix, dtype=float)
    a = np.asarray(a, dtype=np.int64)
    if hm.shape != (cfg.L, cfg.L) or a.shape != (cfg.L, cfg.L):
        raise ValueError(f"H and A must be {cfg.L}x{cfg.L}")
    q = field_.matrix(a)
    if field_.rank(q) < cfg.L:
        raise RankDeficient(f"[A] mod {cfg.p} is singular")
    pair = NestedLatticePair.from_snr(cfg.p, cfg.snr)
    w, mu, c, d, x, target = _precode_and_modulate(cfg, field_, q, pair, generator)
    y = hm @ x
    if not noiseless:
        y = y + _rng(cfg.seed, _NOISE).standard_normal(y.shape)
    if noiseless:
        alpha = np.ones(cfg.L)
    else:
        alpha = np.array([mmse_alpha(hm[l], a[l], pair.snr) for l in range(cfg.L)])
    u, eps, err, pmf = _receive(pair, y, a, d, x, alpha, target, cfg.p)
    ser = np.mean(err != 0, axis=1)
    trace = ChainTrace(w, mu, c, d, x, y, u, eps, target, alpha) if keep_trace else None
    return ChainResult(ser, pmf, bool(np.all(ser == 0)), np.mean(eps**2, axis=1),
                       np.mean(x**2, axis=1), trace, {"kappa": pair.kappa})


def run_ifbf_chain(cfg: DownlinkConfig, h_matrix, a=None, power="stream", noiseless=False,
                   generator=None, keep_trace=False):
    """Simulate integer-forcing beamforming (compressed when ``cfg.r0`` is finite).

    The CP beamforms the modulated streams with ``W = H^-1 A`` so UT ``l``
    sees the integer combination ``a_l^T x``. With finite ``cfg.r0`` the
    beamformed signal is sent over the backhaul with additive Gaussian
    quantization noise of variance ``snr / 2^(2 r0)``.

    Parameters
    ----------
    power : {"stream", "antenna"}
        ``"stream"`` scales the stream power to
        ``snr / (max_l |H^-1 a_l|^2 * deflation)``, the normalization behind
        the closed-form rates. ``"antenna"`` scales by the largest row energy
        of ``W`` instead, which enforces the per-antenna constraint exactly.
    """
    hm = np.asarray(h_matrix, dtype=float)
    if hm.shape != (cfg.L, cfg.L):
        raise ValueError(f"H must be {cfg.L}x{cfg.L}")
    try:
        check_basis(hm)
    except RcofError as exc:
        raise SingularChannel(str(exc)) from None
    field_ = PrimeField(cfg.p)
    a = ifbf_coeffs(hm, cfg.p).a if a is None else np.asarray(a, dtype=np.int64)
    q = field_.matrix(a)
    if field_.rank(q) < cfg.L:
        raise RankDeficient(f"[A] mod {cfg.p} is singular")
    w_bf = np.linalg.solve(hm, a.astype(float))
    integer_err = float(np.max(np.abs(hm @ w_bf - a)))
    if integer_err > 1e-9 * max(1.0, float(np.max(np.abs(a)))):
        raise SingularChannel(f"effective channel is not integer (error {integer_err:.3g})")

    compressed = math.isfinite(cfg.r0)
    deflation = power_deflation(cfg.r0) if compressed else 1.0
    if power == "stream":
        scale = ifbf_objective(hm, a)
    elif power == "antenna":
        scale = float(np.max(np.sum(w_bf**2, axis=1)))
    else:
        raise ValueError(f"power must be 'stream' or 'antenna', got {power!r}")
    pair = NestedLatticePair.from_snr(cfg.p, cfg.snr / (scale * deflation))

    w, mu, c, d, x, target = _precode_and_modulate(cfg, field_, q, pair, generator)
    v = w_bf @ x
    if compressed:
        qvar = quantization_noise_variance(cfg.snr, cfg.r0)
        v = v + math.sqrt(qvar) * _rng(cfg.seed, _QUANT).standard_normal(v.shape)
    y = hm @ v
    if not noiseless:
        y = y + _rng(cfg.seed, _NOISE).standard_normal(y.shape)
    alpha = np.ones(cfg.L)
    u, eps, err, pmf = _receive(pair, y, a, d, x, alpha, target, cfg.p)
    ser = np.mean(err != 0, axis=1)
    trace = ChainTrace(w, mu, c, d, x, y, u, eps, target, alpha, {"v": v, "W": w_bf}) if keep_trace else None
    return ChainResult(ser, pmf, bool(np.all(ser == 0)), np.mean(eps**2, axis=1),
                       np.mean(v**2, axis=1), trace,
                       {"kappa": pair.kappa, "stream_power": pair.snr, "integer_error": integer_err, "a": a})


def run_chain(cfg: DownlinkConfig, h_matrix, a=None, **kwargs) -> ChainResult:
    """Dispatch on ``cfg.scheme`` (RQCoF, IFBF_RQCoF or CIFBF_RQCoF)."""
    if cfg.scheme == Scheme.RQCOF:
        if a is None:
            raise ValueError("RQCoF needs the coefficient matrix A")
        return run_rqcof_chain(cfg, h_matrix, a, **kwargs)
    if cfg.scheme == Scheme.IFBF_RQCOF:
        return run_ifbf_chain(DownlinkConfig(cfg.L, cfg.p, cfg.snr, math.inf, cfg.scheme, cfg.seed,
                                             cfg.n_symbols), h_matrix, a, **kwargs)
    if cfg.scheme == Scheme.CIFBF_RQCOF:
        return run_ifbf_chain(cfg, h_matrix, a, **kwargs)
    raise ValueError(f"no symbol-level chain for {cfg.scheme}")
