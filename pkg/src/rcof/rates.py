"""Closed-form achievable symmetric rates.

All rates are in bits per real channel use. Negative formula values are
clamped to zero; the unclamped value is kept in ``RateReport.components``.
"""

from dataclasses import dataclass, field
import enum
import math

import numpy as np

from .effective_noise import entropy_deficit, noise_entropy
from .errors import InvalidBackhaul, RankDeficient
from .integer_search import ifbf_objective
from .scalar_lattice import NestedLatticePair
from .zp_field import PrimeField, integer_rank


class Scheme(str, enum.Enum):
    QCOF = "QCoF"
    COF = "CoF"
    RQCOF = "RQCoF"
    RCOF = "RCoF"
    IFBF_RQCOF = "IFBF_RQCoF"
    IFBF_RCOF = "IFBF_RCoF"
    CIFBF_RQCOF = "CIFBF_RQCoF"
    CIFBF_RCOF = "CIFBF_RCoF"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        for s in cls:
            if s.value.lower() == name.strip().lower():
                return s
        raise ValueError(f"unknown scheme {name!r}; choose from {', '.join(s.value for s in cls)}")

    @property
    def quantized(self) -> bool:
        """True for the scalar-shaping (finite p) variants."""
        return self.value.endswith("QCoF")


@dataclass
class RateReport:
    scheme: Scheme
    symmetric_rate: float
    components: dict = field(default_factory=dict)

    def as_dict(self):
        return {"scheme": str(self.scheme), "symmetric_rate": self.symmetric_rate, "components": self.components}


def rate_qcof(sigma2: float, pair: NestedLatticePair) -> float:
    """``log2 p - H(z~)`` for Gaussian effective noise of variance ``sigma2``."""
    return entropy_deficit(sigma2, pair)


def rate_cof(sigma2: float, snr: float) -> float:
    """``max(0, 1/2 log2(snr / sigma2))``."""
    if not (sigma2 > 0 and snr > 0):
        raise ValueError("sigma2 and snr must be positive")
    return max(0.0, 0.5 * math.log2(snr / sigma2))


def _check_r0(r0):
    if not r0 >= 0:
        raise InvalidBackhaul(f"backhaul rate must be nonnegative, got {r0}")


def rate_rqcof(per_user_sigma2, pair: NestedLatticePair, r0: float = math.inf) -> RateReport:
    """``min{R0, log2 p - max_l H(z~_l)}``."""
    _check_r0(r0)
    entropies = [noise_entropy(float(s), pair) for s in np.atleast_1d(per_user_sigma2)]
    access = min(entropy_deficit(float(s), pair) for s in np.atleast_1d(per_user_sigma2))
    rate = max(0.0, min(r0, access))
    return RateReport(Scheme.RQCOF, rate, {
        "entropy": entropies, "max_entropy": max(entropies), "log_p": math.log2(pair.p),
        "access_rate": access, "backhaul": r0, "sigma2": [float(s) for s in np.atleast_1d(per_user_sigma2)],
    })


def rate_rcof(per_user_sigma2, snr: float, r0: float = math.inf) -> RateReport:
    """``min{R0, min_l 1/2 log2(snr / sigma2_l)}``."""
    _check_r0(r0)
    s2 = [float(s) for s in np.atleast_1d(per_user_sigma2)]
    per_user = [rate_cof(s, snr) for s in s2]
    access = min(per_user)
    return RateReport(Scheme.RCOF, max(0.0, min(r0, access)), {
        "per_user_rate": per_user, "access_rate": access, "backhaul": r0, "sigma2": s2,
    })


def quantization_noise_variance(snr: float, r0: float) -> float:
    """Backhaul quantization MSE ``snr / 2^(2 R0)``."""
    return snr / 2.0 ** (2.0 * r0)


def power_deflation(r0: float) -> float:
    """``1 + 1/(2^(2R0) - 1)``: the factor by which the beamformed signal power shrinks."""
    return 1.0 + 1.0 / math.expm1(2.0 * r0 * math.log(2.0))


def _check_coeffs(h_matrix, a, p, variant):
    a = np.asarray(a)
    if variant.quantized:
        if PrimeField(p).rank(a) < a.shape[0]:
            raise RankDeficient(f"Q = [A] mod {p} is rank deficient")
    elif integer_rank(a) < a.shape[0]:
        raise RankDeficient("A is rank deficient over R")


def _variant(variant, rq, rc):
    v = str(variant).lower()
    if v in ("rqcof", "qcof", "quantized") or v.endswith("rqcof"):
        return rq
    if v in ("rcof", "cof", "lattice") or v.endswith("rcof"):
        return rc
    raise ValueError(f"variant must be 'rqcof' or 'rcof', got {variant!r}")


def rate_ifbf(h_matrix, a, snr: float, p: int, variant="rcof") -> RateReport:
    """Integer-forcing beamforming with unlimited backhaul.

    The streams are scaled to power ``snr / max_l |H^-1 a_l|^2``; the UT sees
    the exact integer channel ``a_l`` plus unit noise.
    """
    scheme = _variant(variant, Scheme.IFBF_RQCOF, Scheme.IFBF_RCOF)
    _check_coeffs(h_matrix, a, p, scheme)
    norm = ifbf_objective(h_matrix, a)
    comps = {"max_norm": norm, "stream_power": snr / norm}
    if scheme.quantized:
        pair = NestedLatticePair.from_snr(p, snr)
        h_ent = noise_entropy(norm, pair)
        raw = entropy_deficit(norm, pair)
        comps.update(entropy=h_ent, sigma2=norm)
    else:
        raw = 0.5 * math.log2(snr / norm)
    comps["unclamped"] = raw
    return RateReport(scheme, max(0.0, raw), comps)


def rate_cifbf(h_matrix, a, snr: float, p: int, r0: float, variant="rcof") -> RateReport:
    """Compressed integer-forcing beamforming over rate-``r0`` backhaul links.

    The RQCoF variant uses per-user effective noise variance
    ``max_l |H^-1 a_l|^2 (1 + (1 + |h_l|^2 snr) / (2^(2 r0) - 1))``;
    the RCoF variant subtracts
    ``1/2 max_l log2(1 + (1 + |h_l|^2 snr) / (2^(2 r0) - 1))`` from the IFBF rate.
    """
    if not r0 > 0:
        raise InvalidBackhaul(f"CIFBF needs a positive backhaul rate, got {r0}")
    scheme = _variant(variant, Scheme.CIFBF_RQCOF, Scheme.CIFBF_RCOF)
    _check_coeffs(h_matrix, a, p, scheme)
    hm = np.asarray(h_matrix, dtype=float)
    norm = ifbf_objective(hm, a)
    row_gain = np.sum(hm**2, axis=1)
    denom = math.expm1(2.0 * r0 * math.log(2.0))
    inflation = [(1.0 + float(g) * snr) / denom for g in row_gain]
    comps = {
        "max_norm": norm,
        "quantization_noise_variance": quantization_noise_variance(snr, r0),
        "power_deflation": power_deflation(r0),
        "stream_power": snr / (norm * power_deflation(r0)),
        "backhaul": r0,
    }
    if scheme.quantized:
        pair = NestedLatticePair.from_snr(p, snr)
        s2 = [norm * (1.0 + x) for x in inflation]
        ents = [noise_entropy(s, pair) for s in s2]
        raw = min(entropy_deficit(s, pair) for s in s2)
        comps.update(sigma2=s2, entropy=ents)
    else:
        penalty = 0.5 * max(math.log2(1.0 + x) for x in inflation)
        raw = 0.5 * math.log2(snr / norm) - penalty
        comps.update(quantization_penalty=penalty)
    comps["unclamped"] = raw
    return RateReport(scheme, max(0.0, raw), comps)
