"""Monte Carlo sweeps over R0 or SNR and their CSV output.

Every trial draws a fresh channel from ``trial_rng(seed, trial)``, so a
sweep is reproducible from its configuration alone and independent of how
trials are spread over worker processes. Curve means use ``math.fsum``,
which is exactly rounded and therefore insensitive to summation order.

A trial whose system matrix is rank deficient (or whose greedy selection
cannot reach rank L) contributes rate zero for every user.
"""

from concurrent.futures import ProcessPoolExecutor
import configparser
import csv
from dataclasses import asdict, dataclass, field
import functools
import io
import math
import os
import subprocess

import numpy as np

from . import __version__
from .channel import SoftHandoffParams, complex_to_real, rayleigh_matrix, soft_handoff_matrix, trial_rng
from .effective_noise import effective_variance
from .errors import ConfigError, RankDeficient
from .integer_search import best_coeff_qcof, ifbf_coeffs
from .rates import Scheme, rate_cifbf, rate_ifbf, rate_rcof, rate_rqcof
from .scalar_lattice import NestedLatticePair
from .scheduling import SelectionInstance, greedy_select
from .zp_field import is_prime

CSV_COLUMNS = ("scheme", "x", "mean_rate", "stderr", "rank_deficiency_fraction", "trials", "seed")
CHANNELS = ("soft_handoff", "gaussian")
AXES = ("r0", "snr")
SELECTIONS = ("none", "random", "greedy")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep.

    ``grid`` holds R0 values in bits when ``axis == "r0"`` and SNR values in
    dB when ``axis == "snr"``; the other quantity is fixed by ``snr_db`` or
    ``r0``. With ``complex_model`` the Soft-Handoff channel is treated as
    complex: rates are computed on the real expansion and reported per
    complex symbol, and the backhaul of ``R0`` bits per complex symbol is
    split evenly between the two real dimensions.
    """

    schemes: tuple
    grid: tuple
    axis: str = "r0"
    channel: str = "soft_handoff"
    gamma: float | tuple = (0.5, 1.0)
    gamma_per_entry: bool = True
    complex_model: bool = True
    snr_db: float = 20.0
    r0: float = math.inf
    p: int = 251
    L: int = 5
    K: int | None = None
    trials: int = 100
    seed: int = 0
    selection: tuple = ("none",)
    refine: bool | None = None
    workers: int = 1
    out: str | None = None
    overlay: str | None = None

    def __post_init__(self):
        if self.K is None:
            object.__setattr__(self, "K", self.L)
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) if isinstance(s, str) else Scheme(s)
                                                  for s in self.schemes))
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        sel = (self.selection,) if isinstance(self.selection, str) else tuple(self.selection)
        object.__setattr__(self, "selection", sel)
        if not np.isscalar(self.gamma):
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        self.validate()

    def validate(self):
        if not self.schemes:
            raise ConfigError("experiment.schemes", "at least one scheme is required")
        for s in self.schemes:
            if s in (Scheme.QCOF, Scheme.COF):
                raise ConfigError("experiment.schemes", f"{s} is a single-receiver rate; use RQCoF/RCoF")
        if self.axis not in AXES:
            raise ConfigError("sweep.axis", f"must be one of {AXES}, got {self.axis!r}")
        if not self.grid:
            raise ConfigError("sweep.grid", "grid must be nonempty")
        if list(self.grid) != sorted(self.grid) or len(set(self.grid)) != len(self.grid):
            raise ConfigError("sweep.grid", "values must be strictly ascending")
        if self.axis == "r0" and min(self.grid) < 0:
            raise ConfigError("sweep.grid", "backhaul rates must be nonnegative")
        if self.trials < 1:
            raise ConfigError("experiment.trials", "must be at least 1")
        if self.channel not in CHANNELS:
            raise ConfigError("channel.model", f"must be one of {CHANNELS}, got {self.channel!r}")
        if not (isinstance(self.p, int) and is_prime(self.p)):
            raise ConfigError("experiment.p", f"{self.p} is not prime")
        if self.L < 1 or self.K < self.L:
            raise ConfigError("channel.K", f"need K >= L >= 1, got K={self.K}, L={self.L}")
        for sel in self.selection:
            if sel not in SELECTIONS:
                raise ConfigError("experiment.selection", f"must be among {SELECTIONS}, got {sel!r}")
            if sel == "none" and self.K != self.L:
                raise ConfigError("experiment.selection", "selection 'none' needs K == L")
            if sel == "greedy" and any(s.value.startswith(("IFBF", "CIFBF")) for s in self.schemes):
                raise ConfigError("experiment.selection", "greedy selection is defined for RQCoF/RCoF only")
        if self.channel == "soft_handoff":
            if self.K != self.L:
                raise ConfigError("channel.K", "the Soft-Handoff model has K == L")
            try:
                SoftHandoffParams(self.L, self.gamma, self.gamma_per_entry)
            except (ValueError, TypeError) as exc:
                raise ConfigError("channel.gamma", str(exc)) from None
        if self.axis == "snr" and not self.r0 >= 0:
            raise ConfigError("sweep.r0", "fixed backhaul rate must be nonnegative")
        if self.workers < 1:
            raise ConfigError("experiment.workers", "must be at least 1")

    @property
    def is_complex(self) -> bool:
        return self.channel == "soft_handoff" and self.complex_model

    def replace(self, **changes) -> "ExperimentSpec":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentSpec(**d)

    def manifest(self) -> dict:
        d = asdict(self)
        # neither changes the numbers, so neither may change the bytes
        del d["out"], d["workers"]
        d["schemes"] = ",".join(str(s) for s in self.schemes)
        d["selection"] = ",".join(self.selection)
        d["grid"] = ",".join(_fmt(x) for x in self.grid)
        if not np.isscalar(self.gamma):
            d["gamma"] = ",".join(_fmt(g) for g in self.gamma)
        return {k: ("" if v is None else str(v)) for k, v in sorted(d.items())}


@dataclass(frozen=True)
class CurvePoint:
    x: float
    mean_rate: float
    stderr: float
    rank_deficiency_fraction: float
    trials: int


@dataclass
class Curve:
    scheme: str
    points: list = field(default_factory=list)
    seed: int | str = ""


# -- per-trial evaluation --------------------------------------------------


def _draw_channel(spec, rng):
    if spec.channel == "soft_handoff":
        hc = soft_handoff_matrix(SoftHandoffParams(spec.L, spec.gamma, spec.gamma_per_entry), rng)
        return complex_to_real(hc) if spec.is_complex else hc.real.copy()
    return rayleigh_matrix(spec.K, spec.L, rng)


class _Users:
    """Per-user coefficient rows and effective-noise variances at one SNR (computed lazily)."""

    def __init__(self, h, snr, p, refine):
        self.h, self.snr, self.p, self.refine = h, snr, p, refine
        self._cof = None
        self._qcof = None

    def cof(self):
        if self._cof is None:
            rows = np.array([best_coeff_qcof(hk, self.snr, None, self.refine) for hk in self.h])
            s2 = np.array([effective_variance(hk, ak, self.snr) for hk, ak in zip(self.h, rows)])
            self._cof = rows, s2
        return self._cof

    def qcof(self):
        if self._qcof is None:
            rows, s2 = (x.copy() for x in self.cof())
            for k, ak in enumerate(rows):
                # the unconstrained optimum is also optimal unless it vanishes mod p
                if not np.any(np.mod(ak, self.p)):
                    rows[k] = best_coeff_qcof(self.h[k], self.snr, self.p, self.refine)
                    s2[k] = effective_variance(self.h[k], rows[k], self.snr)
            self._qcof = rows, s2
        return self._qcof


def _choose(selection, inst, random_subset):
    """Selected user indices, or None when the system matrix is rank deficient."""
    if selection == "greedy":
        res = greedy_select(inst)
        return list(res.chosen) if res.feasible else None
    users = list(range(inst.K)) if selection == "none" else list(random_subset)
    return users if inst.rank(users) == inst.L else None


def _trial(spec: ExperimentSpec, t: int):
    """Rates (per grid point) and deficiency flags for every (scheme, selection) curve."""
    rng = trial_rng(spec.seed, t)
    h = _draw_channel(spec, rng)
    n_real = h.shape[1]
    random_subset = np.sort(rng.choice(h.shape[0], size=n_real, replace=False)) \
        if "random" in spec.selection else None
    scale = 2.0 if spec.is_complex else 1.0
    if spec.axis == "r0":
        snrs = [db_to_linear(spec.snr_db)]
        r0s = [x / scale for x in spec.grid]
    else:
        snrs = [db_to_linear(x) for x in spec.grid]
        r0s = [spec.r0 / scale]

    out = {}
    for sel in spec.selection:
        for scheme in spec.schemes:
            out[_label(spec, scheme, sel)] = ([], [])
    for snr in snrs:
        users = _Users(h, snr, spec.p, spec.refine)
        for sel in spec.selection:
            for scheme in spec.schemes:
                rates, flags = out[_label(spec, scheme, sel)]
                values, deficient = _scheme_rates(spec, scheme, sel, h, snr, r0s, users, random_subset)
                rates.extend(scale * v for v in values)
                flags.extend([deficient] * len(values))
    return out


def _scheme_rates(spec, scheme, sel, h, snr, r0s, users, random_subset):
    n_real = h.shape[1]
    zero = [0.0] * len(r0s)
    if scheme in (Scheme.RCOF, Scheme.RQCOF):
        quantized = scheme == Scheme.RQCOF
        rows, s2 = users.qcof() if quantized else users.cof()
        inst = SelectionInstance(rows, s2, spec.p if quantized else None)
        chosen = _choose(sel, inst, random_subset)
        if chosen is None:
            return zero, True
        if quantized:
            access = rate_rqcof(s2[chosen], NestedLatticePair.from_snr(spec.p, snr)).symmetric_rate
        else:
            access = rate_rcof(s2[chosen], snr).symmetric_rate
        return [max(0.0, min(r0, access)) for r0 in r0s], False

    users_idx = list(range(n_real)) if sel == "none" else list(random_subset)
    hs = h[users_idx]
    try:
        coeffs = ifbf_coeffs(hs, spec.p)
    except Exception:
        return zero, True
    variant = "rqcof" if scheme.quantized else "rcof"
    try:
        if scheme in (Scheme.IFBF_RCOF, Scheme.IFBF_RQCOF):
            r = rate_ifbf(hs, coeffs.a, snr, spec.p, variant).symmetric_rate
            return [r] * len(r0s), False
        return [rate_cifbf(hs, coeffs.a, snr, spec.p, r0, variant).symmetric_rate if r0 > 0 else 0.0
                for r0 in r0s], False
    except RankDeficient:
        return zero, True


def _label(spec, scheme, sel):
    return str(scheme) if len(spec.selection) == 1 else f"{scheme}/{sel}"


def _run_chunk(spec, trials):
    return [_trial(spec, t) for t in trials]


def run_sweep(spec: ExperimentSpec) -> list:
    """Average every curve over ``spec.trials`` channel realizations."""
    trials = list(range(spec.trials))
    if spec.workers > 1 and spec.trials > 1:
        chunks = [trials[i::spec.workers] for i in range(spec.workers)]
        with ProcessPoolExecutor(spec.workers) as pool:
            parts = list(pool.map(functools.partial(_run_chunk, spec), chunks))
        per_trial = [None] * spec.trials
        for chunk, res in zip(chunks, parts):
            for t, r in zip(chunk, res):
                per_trial[t] = r
    else:
        per_trial = _run_chunk(spec, trials)

    curves = []
    for label in per_trial[0]:
        rates = np.array([r[label][0] for r in per_trial])
        flags = np.array([r[label][1] for r in per_trial], dtype=bool)
        curve = Curve(label, seed=spec.seed)
        for j, x in enumerate(spec.grid):
            col = rates[:, j].tolist()
            n = len(col)
            mean = math.fsum(col) / n
            if n > 1:
                var = math.fsum((v - mean) ** 2 for v in col) / (n - 1)
                se = math.sqrt(var / n)
            else:
                se = 0.0
            curve.points.append(CurvePoint(x, mean, se, float(flags[:, j].mean()), n))
        curves.append(curve)
    return curves


# -- CSV ---------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@functools.lru_cache(maxsize=1)
def build_id() -> str:
    desc = ""
    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=os.path.dirname(__file__),
                              capture_output=True, text=True, timeout=5).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"rcof {__version__}" + (f" ({desc})" if desc else "")


def read_overlay(path) -> list:
    """Reference curves from a CSV with columns ``scheme, x, rate`` (or ``mean_rate``)."""
    curves = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    except OSError as exc:
        raise ConfigError("output.overlay", f"cannot read {path}: {exc}") from None
    for i, row in enumerate(rows):
        try:
            name = row["scheme"].strip()
            x = float(row["x"])
            rate = float(row["rate"] if "rate" in row else row["mean_rate"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("output.overlay", f"row {i + 2} needs scheme, x and rate columns") from None
        curves.setdefault(name, Curve(f"overlay:{name}", seed="")).points.append(CurvePoint(x, rate, 0.0, 0.0, 0))
    return list(curves.values())


def format_csv(curves, manifest=None) -> str:
    buf = io.StringIO()
    if manifest:
        for key, value in manifest.items():
            buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    rows = []
    for c in curves:
        for pt in c.points:
            rows.append((c.scheme, pt.x, pt))
    for scheme, x, pt in sorted(rows, key=lambda r: (r[0], r[1])):
        writer.writerow([scheme, _fmt(x), _fmt(pt.mean_rate), _fmt(pt.stderr),
                         _fmt(pt.rank_deficiency_fraction), pt.trials,
                         next(c.seed for c in curves if c.scheme == scheme)])
    return buf.getvalue()


def emit_csv(curves, path, manifest=None):
    """Write curves as UTF-8 CSV, one row per (scheme, x), sorted by scheme then x.

    ``manifest`` entries become ``# key: value`` comment lines above the header.
    """
    text = format_csv(curves, manifest)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def sweep_manifest(spec: ExperimentSpec) -> dict:
    m = {"build": build_id()}
    m.update(spec.manifest())
    return m


# -- configuration files -----------------------------------------------------


def _floats(text, key):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(key, f"expected comma-separated numbers, got {text!r}") from None


def _grid(text, key):
    """``a, b, c`` or ``start:stop:step`` (inclusive of stop)."""
    text = text.strip()
    if ":" in text:
        parts = _floats(text.replace(":", ","), key)
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(key, "range form is start:stop:step with a positive step")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    return _floats(text, key)


def load_config(path_or_text) -> ExperimentSpec:
    """Parse an INI-style experiment file into an :class:`ExperimentSpec`.

    Sections and keys (all optional except ``experiment.schemes`` and
    ``sweep.grid``)::

        [experiment]  schemes, trials, seed, p, selection, workers, refine
        [channel]     model, L, K, gamma, gamma_mode, complex
        [sweep]       axis, grid, snr_db, r0
        [output]      path, overlay
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if os.path.exists(str(path_or_text)):
            with open(path_or_text, encoding="utf-8") as fh:
                cp.read_file(fh)
        else:
            cp.read_string(str(path_or_text))
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    known = {"experiment", "channel", "sweep", "output"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(sec, "unknown section")

    def get(section, key, conv=str, default=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, ConfigError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}") from None

    def boolean(raw):
        v = raw.lower()
        if v in ("1", "yes", "true", "on"):
            return True
        if v in ("0", "no", "false", "off"):
            return False
        raise ValueError(raw)

    def optional_bool(raw):
        return None if raw.lower() in ("auto", "") else boolean(raw)

    def r0_value(raw):
        return math.inf if raw.lower() in ("inf", "infinity") else float(raw)

    schemes = get("experiment", "schemes")
    if not schemes:
        raise ConfigError("experiment.schemes", "missing")
    try:
        scheme_list = tuple(Scheme.parse(s) for s in schemes.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError("experiment.schemes", str(exc)) from None
    grid_text = get("sweep", "grid")
    if grid_text is None:
        raise ConfigError("sweep.grid", "missing")
    gamma_text = get("channel", "gamma", default="0.5, 1.0")
    gamma = _floats(gamma_text, "channel.gamma")
    if len(gamma) == 1:
        gamma = gamma[0]
    elif len(gamma) != 2:
        raise ConfigError("channel.gamma", "give one level or a 'low, high' range")
    gamma_mode = get("channel", "gamma_mode", default="entry")
    if gamma_mode not in ("entry", "trial"):
        raise ConfigError("channel.gamma_mode", "must be 'entry' or 'trial'")
    L = get("channel", "L", int, 5)
    kwargs = dict(
        schemes=scheme_list,
        grid=_grid(grid_text, "sweep.grid"),
        axis=get("sweep", "axis", default="r0"),
        channel=get("channel", "model", default="soft_handoff"),
        gamma=gamma,
        gamma_per_entry=gamma_mode == "entry",
        complex_model=get("channel", "complex", boolean, True),
        snr_db=get("sweep", "snr_db", float, 20.0),
        r0=get("sweep", "r0", r0_value, math.inf),
        p=get("experiment", "p", int, 251),
        L=L,
        K=get("channel", "K", int, L),
        trials=get("experiment", "trials", int, 100),
        seed=get("experiment", "seed", int, 0),
        selection=tuple(s.strip() for s in get("experiment", "selection", default="none").split(",") if s.strip()),
        refine=get("experiment", "refine", optional_bool, None),
        workers=get("experiment", "workers", int, 1),
        out=get("output", "path"),
        overlay=get("output", "overlay"),
    )
    return ExperimentSpec(**kwargs)
