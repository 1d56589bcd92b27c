"""Experiment configurations and runners behind the command line.

A run writes one directory of plot-ready files.  Each runner returns its
summary dict; ``summary["verdict"]`` is ``"pass"``, ``"fail"`` or an
``"insufficient ..."`` note for degenerate ladders.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import dos as dosm
from . import ergodic, output
from .models import (
    DEFAULT_TAIL_TOL,
    DEFAULT_TWIST,
    GOLDEN,
    AlmostMathieu,
    Anderson,
    CoupledChain,
    DisorderLaw,
    HoppingParams,
    ReducedChain,
)
from .truncation import assemble, build_window, eigenvalues, truncation_trace_defect

log = logging.getLogger(__name__)

EXPERIMENTS = ("dos-convergence", "butterfly", "disorder-ensemble",
               "covariance-audit", "birkhoff-rates", "trace-defect")
MODELS = ("almost-mathieu", "anderson", "reduced-chain", "coupled-chain")

# fields that change where or how fast a run happens, never what it computes
_NOT_HASHED = ("out", "threads")


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _ints(text):
    return tuple(int(float(v)) for v in str(text).replace(",", " ").split())


@dataclass
class RunConfig:
    experiment: str = "dos-convergence"
    model: str = "reduced-chain"
    alpha: float = GOLDEN
    lam: float = 2.0
    phase: float = 0.0
    theta: float = DEFAULT_TWIST
    b: float = 0.0
    A: float = 1.0
    B: float = 2.0
    Lz: float = 1.0
    disorder: str = "uniform"
    low: float = -1.0
    high: float = 1.0
    mean: float = 0.0
    std: float = 1.0
    seed: int = 0
    ladder: tuple = (25.0, 50.0, 100.0, 200.0)
    nodes: int = 16
    nodes2: int = 0
    samples: int = 8
    phases: int = 8
    alpha_count: int = 199
    shifts: int = 5
    birkhoff_N: tuple = (10, 100, 1000, 10000)
    modes: tuple = (1, 2, 3)
    kernel: str = "gaussian"
    bandwidth: float = 0.05
    tail_tol: float = DEFAULT_TAIL_TOL
    threads: int = 1
    out: str = "runs/out"

    _parsers = {"ladder": _floats, "birkhoff_N": _ints, "modes": _ints}

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        cfg = cls()
        cfg.update(values)
        return cfg

    def update(self, values: dict) -> None:
        known = {f.name: f for f in fields(self)}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key == "L":
                key = "ladder"
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            current = getattr(self, key)
            if key in self._parsers and not isinstance(raw, tuple):
                value = self._parsers[key](raw)
            elif isinstance(raw, (list, tuple)):
                value = tuple(raw)
            elif isinstance(current, bool):
                value = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(float(raw))
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = str(raw)
            setattr(self, key, value)

    def validate(self) -> None:
        """Check every field against the library preconditions up front."""
        def bad(name, why):
            raise ValueError(f"config field {name!r}: {why} (got {getattr(self, name)!r})")

        if self.experiment not in EXPERIMENTS:
            bad("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        if self.model not in MODELS:
            bad("model", f"must be one of {', '.join(MODELS)}")
        if not self.ladder or any(not L > 0 for L in self.ladder):
            bad("ladder", "needs positive window sizes")
        if list(self.ladder) != sorted(set(self.ladder)):
            bad("ladder", "must be strictly increasing")
        for name in ("nodes", "samples", "phases", "alpha_count", "threads"):
            if getattr(self, name) < 1:
                bad(name, "must be >= 1")
        if self.nodes2 < 0:
            bad("nodes2", "must be >= 0 (0 means same as nodes)")
        if self.shifts < 0:
            bad("shifts", "must be >= 0")
        if not self.tail_tol > 0:
            bad("tail_tol", "must be > 0")
        if not self.bandwidth > 0:
            bad("bandwidth", "must be > 0")
        if self.kernel not in ("gaussian", "lorentzian"):
            bad("kernel", "must be gaussian or lorentzian")
        if any(N < 0 for N in self.birkhoff_N):
            bad("birkhoff_N", "must be >= 0")
        if any(m == 0 for m in self.modes):
            bad("modes", "must be nonzero")
        if self.experiment == "butterfly" and self.phases % 2:
            bad("phases", "butterfly phase grid must be even")
        # constructing the models runs their own checks
        try:
            self.model_at()
            self.all_models()
        except ValueError as exc:
            raise ValueError(f"config model parameters: {exc}") from None
        if self.model == "coupled-chain" and min(self.ladder) <= abs(self.b):
            bad("ladder", "coupled chain needs every L > |b|")

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items()}

    def config_hash(self) -> str:
        payload = {k: v for k, v in self.as_dict().items() if k not in _NOT_HASHED}
        text = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    # -- model factories --------------------------------------------------

    @property
    def hopping(self) -> HoppingParams:
        return HoppingParams(self.A, self.B, self.Lz)

    def law(self, seed=None) -> DisorderLaw:
        return DisorderLaw(kind=self.disorder, low=self.low, high=self.high, mean=self.mean,
                           std=self.std, seed=self.seed if seed is None else seed)

    def model_at(self, param=None, kind=None):
        """The configured model; ``param`` overrides its ergodic parameter."""
        kind = kind or self.model
        if kind == "almost-mathieu":
            return AlmostMathieu(self.alpha, self.lam, self.phase if param is None else param)
        if kind == "anderson":
            return Anderson(self.law(None if param is None else int(param)))
        cls = ReducedChain if kind == "reduced-chain" else CoupledChain
        return cls(self.theta, self.b if param is None else param, self.hopping)

    def all_models(self):
        return [self.model_at(kind=k) for k in MODELS]


def load_config(path) -> dict:
    """Read a flat ``key = value`` file (``#`` comments, no sections)."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[run]\n" + Path(path).read_text())
    return dict(parser["run"])


def model_param(model) -> float:
    if isinstance(model, AlmostMathieu):
        return model.phase
    if isinstance(model, Anderson):
        return float(model.law.seed)
    return model.b


def _pmap(fn, tasks, threads):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _spectrum(cfg, model, L):
    win = build_window(model, L)
    return win.total, eigenvalues(assemble(model, win, cfg.tail_tol))


def _limiting_estimate(cfg, L):
    """Parameter-averaged reference measure for the configured model at size ``L``."""
    M = cfg.nodes
    if cfg.model == "reduced-chain":
        return dosm.limiting_dos_reduced(cfg.theta, cfg.hopping, L, M, cfg.tail_tol, cfg.threads)
    if cfg.model == "coupled-chain":
        return dosm.limiting_dos_coupled(cfg.theta, cfg.hopping, L, M, cfg.nodes2 or M,
                                         cfg.tail_tol, cfg.threads)
    if cfg.model == "almost-mathieu":
        params = list(dosm.midpoint_nodes(2.0 * math.pi, M))
    else:
        params = [cfg.seed + 1 + k for k in range(M)]

    def one(p):
        total, eigs = _spectrum(cfg, cfg.model_at(p), L)
        return dosm.empirical_dos(eigs, total)

    parts = _pmap(one, params, cfg.threads)
    return dosm.LimitingDOSEstimate(dosm.mixture(parts), {"param": np.array(params, dtype=float)})


# --------------------------------------------------------------------------
# runners


def run_dos_convergence(cfg: RunConfig, out: Path) -> dict:
    model = cfg.model_at()
    ladder = list(cfg.ladder)
    results = _pmap(lambda L: _spectrum(cfg, model, L), ladder, cfg.threads)
    h = cfg.config_hash()
    param = model_param(model)

    spectra, atoms, curves, measures = [], [], [], []
    for L, (total, eigs) in zip(ladder, results):
        spectra += output.spectra_rows(model.kind, L, param, eigs)
        d = dosm.empirical_dos(eigs, total)
        measures.append(d)
        atoms += [(float(L), float(e), float(w)) for e, w in zip(d.energies, d.weights)]
        c = dosm.smooth(d, cfg.kernel, cfg.bandwidth)
        curves += [(float(L), float(e), float(v)) for e, v in zip(c.grid, c.density)]

    estimate = _limiting_estimate(cfg, ladder[-1])
    ks_ref = [dosm.ks_distance(m, measures[-1]) for m in measures[:-1]]
    ks_lim = [dosm.ks_distance(m, estimate.mixture) for m in measures]

    output.write_csv(out / "spectra.csv", output.SPECTRA_HEADER, spectra, h)
    output.write_csv(out / "dos.csv", ("L", "energy", "weight"), atoms, h)
    output.write_csv(out / "curve.csv", ("L", "energy", "density"), curves, h)
    output.write_json(out / "limiting.json", estimate.sidecar(), h)

    summary = {"experiment": cfg.experiment, "model": model.kind, "ladder": ladder,
               "ks_to_largest": ks_ref, "ks_to_limiting": ks_lim}
    if len(ladder) < 3:
        summary.update(decreasing=None, verdict="insufficient ladder")
    else:
        dec = strictly_decreasing(ks_ref)
        summary.update(decreasing=dec, verdict="pass" if dec else "fail")
    if isinstance(model, CoupledChain) and model.hopping.A == 0.0:
        summary["ks_free_chain"] = [dosm.ks_to_cdf(m, dosm.free_chain_cdf(+1.0)) for m in measures]
    return summary


def butterfly_alphas(count: int) -> np.ndarray:
    """``count`` frequencies in (0, 1), offset from the rationals ``j/(count+1)``."""
    return (np.arange(count) + GOLDEN) / (count + 1)


def run_butterfly(cfg: RunConfig, out: Path) -> dict:
    L = cfg.ladder[-1]
    alphas = butterfly_alphas(cfg.alpha_count)
    # an even grid contains theta + pi with every theta
    phases = 2.0 * math.pi * np.arange(cfg.phases) / cfg.phases

    def column(alpha):
        spectra = [_spectrum(cfg, AlmostMathieu(float(alpha), cfg.lam, float(p)), L)[1] for p in phases]
        return np.mean(spectra, axis=0)

    columns = _pmap(column, alphas, cfg.threads)
    rows, asym = [], []
    for alpha, col in zip(alphas, columns):
        rows += [(float(alpha), j, float(e)) for j, e in enumerate(col)]
        # snap to 1e-12 so that ulp-level differences between E and -E do not
        # register as a full atom of asymmetry
        d = dosm.empirical_dos(np.round(col, 12) + 0.0, col.size)
        asym.append(dosm.ks_distance(d, d.reflected()))
    h = cfg.config_hash()
    output.write_csv(out / "spectra.csv", ("alpha", "index", "eigenvalue"), rows, h)
    ok = max(asym) <= 0.02
    return {"experiment": cfg.experiment, "L": L, "lambda": cfg.lam, "rows": len(rows),
            "max_reflection_ks": max(asym), "verdict": "pass" if ok else "fail"}


def run_disorder_ensemble(cfg: RunConfig, out: Path) -> dict:
    seeds = [cfg.seed + s for s in range(cfg.samples)]
    tasks = [(L, s) for L in cfg.ladder for s in seeds]

    def one(task):
        L, s = task
        return _spectrum(cfg, Anderson(cfg.law(s)), L)

    results = dict(zip(tasks, _pmap(one, tasks, cfg.threads)))
    spectra, atoms, medians = [], [], []
    for L in cfg.ladder:
        parts = [dosm.empirical_dos(results[(L, s)][1], results[(L, s)][0]) for s in seeds]
        for s in seeds:
            spectra += output.spectra_rows("anderson", L, s, results[(L, s)][1])
        mix = dosm.mixture(parts)
        atoms += [(float(L), float(e), float(w)) for e, w in zip(mix.energies, mix.weights)]
        medians.append(float(np.median([dosm.ks_distance(p, mix) for p in parts])))
    h = cfg.config_hash()
    output.write_csv(out / "spectra.csv", output.SPECTRA_HEADER, spectra, h)
    output.write_csv(out / "dos.csv", ("L", "energy", "weight"), atoms, h)
    summary = {"experiment": cfg.experiment, "ladder": list(cfg.ladder), "samples": cfg.samples,
               "median_ks_to_mixture": medians}
    if cfg.samples < 2:
        summary.update(decreasing=None, verdict="insufficient samples")
    elif len(cfg.ladder) < 2:
        summary.update(decreasing=None, verdict="insufficient ladder")
    else:
        dec = strictly_decreasing(medians)
        summary.update(decreasing=dec, verdict="pass" if dec else "fail")
    return summary


COVARIANCE_TOL = 1e-12


def run_covariance_audit(cfg: RunConfig, out: Path) -> dict:
    L = cfg.ladder[0]
    tasks = []
    for model in cfg.all_models():
        laws = ("layer1", "layer2") if isinstance(model, CoupledChain) else (None,)
        for law in laws:
            for x in range(-cfg.shifts, cfg.shifts + 1):
                tasks.append((model, law, x))

    def one(task):
        model, law, x = task
        return ergodic.covariance_residual(model, x, build_window(model, L), cfg.tail_tol, law)

    residuals = _pmap(one, tasks, cfg.threads)
    rows = [(m.kind, law or "shift", x, float(r)) for (m, law, x), r in zip(tasks, residuals)]
    output.write_csv(out / "table.csv", ("model_id", "law", "x", "residual"), rows, cfg.config_hash())
    worst = max(residuals)
    return {"experiment": cfg.experiment, "L": L, "max_residual": worst,
            "tolerance": COVARIANCE_TOL, "verdict": "pass" if worst <= COVARIANCE_TOL else "fail"}


def run_birkhoff_rates(cfg: RunConfig, out: Path) -> dict:
    rot = ergodic.CircleRotation(1.0, cfg.alpha, 1)
    rows, ok = [], True
    for m in cfg.modes:
        const = 4.0 / abs(1.0 - np.exp(-2j * np.pi * m * cfg.alpha))
        for N in cfg.birkhoff_N:
            avg = abs(ergodic.birkhoff_average(ergodic.fourier_mode(m), 0.0, rot, N))
            scaled = avg * (2 * N + 1)
            ok &= scaled <= const
            rows.append((m, N, float(avg), float(scaled), float(const)))
    output.write_csv(out / "table.csv", ("mode", "N", "abs_average", "scaled_deviation", "bound"),
                     rows, cfg.config_hash())
    return {"experiment": cfg.experiment, "alpha": cfg.alpha, "verdict": "pass" if ok else "fail"}


def run_trace_defect(cfg: RunConfig, out: Path) -> dict:
    models = cfg.all_models()
    tasks = [(m, L) for m in models for L in cfg.ladder]

    def one(task):
        m, L = task
        win = build_window(m, L)
        return win.total, truncation_trace_defect(m, win, tail_tol=cfg.tail_tol)

    res = _pmap(one, tasks, cfg.threads)
    rows, eps = [], {}
    for (m, L), (total, defect) in zip(tasks, res):
        rows.append((m.kind, float(L), total, float(defect), float(defect / total)))
        eps.setdefault(m.kind, []).append(defect / total)
    output.write_csv(out / "table.csv", ("model_id", "L", "total", "defect", "epsilon"),
                     rows, cfg.config_hash())
    ok = all(strictly_decreasing(v) for v in eps.values()) and len(cfg.ladder) >= 2
    am_exact = max(abs(e - 2.0 / (2 * math.floor(L) + 1))
                   for e, L in zip(eps["almost-mathieu"], cfg.ladder))
    ok &= am_exact <= 1e-12
    return {"experiment": cfg.experiment, "ladder": list(cfg.ladder), "epsilon": eps,
            "almost_mathieu_exact_error": am_exact, "verdict": "pass" if ok else "fail"}


RUNNERS = {
    "dos-convergence": run_dos_convergence,
    "butterfly": run_butterfly,
    "disorder-ensemble": run_disorder_ensemble,
    "covariance-audit": run_covariance_audit,
    "birkhoff-rates": run_birkhoff_rates,
    "trace-defect": run_trace_defect,
}


def run(cfg: RunConfig) -> dict:
    """Validate, execute and persist one experiment; returns its summary."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s (config %s)", cfg.experiment, out, cfg.config_hash())
    summary = RUNNERS[cfg.experiment](cfg, out)
    summary["config"] = {k: v for k, v in cfg.as_dict().items() if k not in _NOT_HASHED}
    output.write_json(out / "summary.json", summary, cfg.config_hash())
    return summary
