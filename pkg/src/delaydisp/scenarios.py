"""Run configurations, figure presets, parameter sweeps and file output.

Config files are INI-style (``configparser``) with sections ``[params]``,
``[profile]``, ``[history]`` and ``[run]``; every key is the name of the
corresponding dataclass field.  List-valued keys are comma separated::

    [params]
    nu = 0.01
    mu = 0.001
    tau = 1.0
    ell = 1.0

    [profile]
    family = combined
    coefficients = 1, 2, 1, 2

    [history]
    kind = constant
    phi = sin
    phi_params = 1
    amplitude = 1.0

    [run]
    n = 199
    dt = 0.001
    T_end = 10
    bdf_order = 2
    snapshot_every = 100
"""
from __future__ import annotations

import configparser
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DecayFit,
    NormSeries,
    StabilityReport,
    dissipation_check,
    fit_decay,
    stability_report,
    theorem_bound_check,
    wirtinger_check,
)
from .discretization import SpatialGrid, build_operators
from .errors import ConfigurationError, DecayFitError
from .integrator import RunStatus, Thresholds, integrate
from .model import DampingProfile, HistorySpec, ModelParams, validate_damping

__all__ = [
    "RunConfig",
    "RunResult",
    "PRESET_NAMES",
    "TAU_SWEEP",
    "preset",
    "preset_members",
    "run",
    "run_sweep",
    "emit",
    "load_config",
    "dump_config",
    "read_norms_csv",
    "default_decay_window",
]

DEFAULT_N = 199
DEFAULT_DT = 1e-3
DEFAULT_T_END = 10.0
DECAY_WINDOW_START = 2.0
SWEEP_AXES = ("tau", "nu", "mu", "profile")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    profile: DampingProfile
    history: HistorySpec
    n: int = DEFAULT_N
    dt: float = DEFAULT_DT
    T_end: float = DEFAULT_T_END
    bdf_order: int = 2
    snapshot_every: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.T_end < 0:
            raise ConfigurationError(f"T_end must be non-negative, got {self.T_end}")
        if self.params.tau > 0 and self.dt > self.params.tau * (1 + 1e-9):
            raise ConfigurationError(f"dt={self.dt} must not exceed tau={self.params.tau}")
        if self.bdf_order not in (1, 2):
            raise ConfigurationError(f"bdf_order must be 1 or 2, got {self.bdf_order}")
        SpatialGrid(self.n, self.params.ell)  # validates n

    def replace(self, **changes) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)

    def to_dict(self) -> dict:
        h = self.history
        return {
            "params": {"nu": self.params.nu, "mu": self.params.mu, "tau": self.params.tau, "ell": self.params.ell},
            "profile": {"family": self.profile.family, "coefficients": list(self.profile.coefficients),
                        "ell": self.profile.ell},
            "history": {"kind": h.kind, "phi": h.phi, "phi_params": list(h.phi_params), "psi": h.psi,
                        "psi_params": list(h.psi_params), "amplitude": h.amplitude, "ell": h.ell,
                        "s_nodes": list(h.s_nodes), "table": [list(r) for r in h.table]},
            "n": self.n,
            "dt": self.dt,
            "T_end": self.T_end,
            "bdf_order": self.bdf_order,
            "snapshot_every": self.snapshot_every,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            params = ModelParams(**data["params"])
            prof = data["profile"]
            profile = DampingProfile(prof["family"], tuple(prof["coefficients"]), prof.get("ell", params.ell))
            hist = dict(data["history"])
            for key in ("phi_params", "psi_params", "s_nodes"):
                if key in hist:
                    hist[key] = tuple(hist[key])
            if "table" in hist:
                hist["table"] = tuple(tuple(r) for r in hist["table"])
            history = HistorySpec(**hist)
            return cls(params, profile, history, int(data["n"]), float(data["dt"]), float(data["T_end"]),
                       int(data["bdf_order"]), int(data["snapshot_every"]))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed run config: {exc}") from exc


# ---------------------------------------------------------------------------
# presets

NEGATIVE_PROFILES = {
    "a": DampingProfile.constant(0.0),
    "b": DampingProfile.constant(-1.0),
    "c": DampingProfile.constant(-2.0),
    "d": DampingProfile.constant(-3.0),
}
POSITIVE_PROFILES = {
    "a": DampingProfile.constant(1.0),
    "b": DampingProfile.affine(1.0, 1.0),
    "c": DampingProfile.sinusoidal(1.0, 1.0, 1.0),
    "d": DampingProfile.combined(1.0, 2.0, 1.0, 2.0),
}
# landscape figure -> (profiles, tau); the even figure after each plots its norms
_FAMILIES = {
    "fig1": (NEGATIVE_PROFILES, 0.0),
    "fig3": (POSITIVE_PROFILES, 0.0),
    "fig5": (NEGATIVE_PROFILES, 1.0),
    "fig7": (POSITIVE_PROFILES, 1.0),
}
_NORM_FIGURES = {"fig2": "fig1", "fig4": "fig3", "fig6": "fig5", "fig8": "fig7"}
_SWEEP_FIGURES = {"fig9": "a", "fig10": "b", "fig11": "c", "fig12": "d"}
TAU_SWEEP = (0.25, 0.5, 0.75, 1.0)

PRESET_NAMES = tuple(
    [f"{fam}{p}" for fam in _FAMILIES for p in "abcd"]
    + list(_NORM_FIGURES)
    + list(_SWEEP_FIGURES)
)


def _config(profile: DampingProfile, tau: float) -> RunConfig:
    return RunConfig(
        params=ModelParams(nu=0.01, mu=0.001, tau=tau, ell=1.0),
        profile=profile,
        history=HistorySpec.constant_profile("sin", amplitude=1.0),
    )


def preset(name: str) -> RunConfig:
    """Configuration of a figure panel.

    Panel names such as ``"fig7d"`` give that run.  Norm figures
    (``fig2``/``fig4``/``fig6``/``fig8``) and the delay sweeps
    (``fig9``..``fig12``) name groups of runs; for those the first member
    is returned (tau = 1 for the sweeps) and :func:`preset_members` lists
    them all.
    """
    if name in _NORM_FIGURES:
        return preset(_NORM_FIGURES[name] + "a")
    if name in _SWEEP_FIGURES:
        return _config(POSITIVE_PROFILES[_SWEEP_FIGURES[name]], TAU_SWEEP[-1])
    fam, panel = name[:-1], name[-1:]
    if fam in _FAMILIES and panel in "abcd":
        profiles, tau = _FAMILIES[fam]
        return _config(profiles[panel], tau)
    raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


def preset_members(name: str) -> list[tuple[str, RunConfig]]:
    """(label, config) for every run a preset name stands for."""
    if name in _NORM_FIGURES:
        fam = _NORM_FIGURES[name]
        return [(f"{fam}{p}", preset(f"{fam}{p}")) for p in "abcd"]
    if name in _SWEEP_FIGURES:
        base = preset(name)
        return [(f"tau={tau:g}", base.replace(params=base.params.replace(tau=tau))) for tau in TAU_SWEEP]
    return [(name, preset(name))]


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    config: RunConfig
    norm_series: NormSeries
    snapshots: list
    status: RunStatus
    stability: StabilityReport | None = None
    decay: DecayFit | None = None
    metadata: dict = field(default_factory=dict)
    grid: SpatialGrid | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.snapshots[-1][1]


def default_decay_window(T_end: float, t_last: float) -> tuple[float, float]:
    """[2, t_last], starting earlier for runs shorter than 10 time units."""
    return (min(DECAY_WINDOW_START, T_end / 5), t_last)


def run(config: RunConfig, *, thresholds: Thresholds | None = None, with_stability: bool = True,
        decay_window: tuple | None = None) -> RunResult:
    """Integrate one configuration and attach the diagnostics."""
    traj = integrate(
        config.params, config.profile, config.history, config.n, config.dt, config.T_end,
        bdf_order=config.bdf_order, snapshot_every=config.snapshot_every, thresholds=thresholds,
    )
    series = traj.norms
    meta = dict(traj.metadata)
    meta["hypotheses"] = validate_damping(config.profile).as_dict()
    ell, h = config.params.ell, traj.grid.h
    ratios = np.array([wirtinger_check(series.row(i), ell) for i in range(len(series))]).reshape(-1, 2)
    meta["wirtinger_max"] = [float(ratios[:, 0].max()), float(ratios[:, 1].max())]
    meta["wirtinger_ok"] = bool(np.all(ratios <= 1.0 + 5.0 * h))

    stability = None
    if with_stability:
        used = config.params.replace(tau=meta["tau_used"])
        stability = stability_report(used, config.profile, config.history, build_operators(traj.grid),
                                     ds=config.dt)
        # None marks "theorem not applicable", never a violation
        meta["theorem_bound_violations"] = theorem_bound_check(
            series.t, series.h2_u, stability, healthy=traj.status.state == "healthy")
        if not math.isnan(stability.omega):
            meta["dissipation_violation_fraction"] = dissipation_check(
                series, stability.omega, config.params.mu, config.dt)

    decay = None
    window = decay_window or default_decay_window(config.T_end, float(series.t[-1]))
    if series.t[-1] > window[0]:
        try:
            decay = fit_decay(series.t, series.l2_u, window)
        except DecayFitError as exc:
            meta["decay_fit_error"] = str(exc)
    return RunResult(config, series, traj.snapshots, traj.status, stability, decay, meta, traj.grid)


def _validate_sweep(base: RunConfig, axis: str, values) -> list[RunConfig]:
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    configs = []
    for v in values:
        if axis == "profile":
            if not isinstance(v, DampingProfile):
                raise ConfigurationError(f"profile sweep values must be DampingProfile, got {v!r}")
            configs.append(base.replace(profile=v))
            continue
        v = float(v)
        if axis == "tau" and 0 < v < base.dt * (1 - 1e-9):
            raise ConfigurationError(f"tau={v} is positive but below dt={base.dt}")
        configs.append(base.replace(params=base.params.replace(**{axis: v})))
    return configs


def run_sweep(base: RunConfig, axis: str, values, *, max_workers: int = 1,
              thresholds: Thresholds | None = None) -> list[RunResult]:
    """Independent runs with one parameter varied; results keep the input order.

    Every value is validated before any run starts.
    """
    configs = _validate_sweep(base, axis, list(values))
    if not configs:
        return []
    one = partial(run, thresholds=thresholds)
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, configs))
    return [one(cfg) for cfg in configs]


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        return repr(float(x))
    return np.format_float_positional(x, precision=12, unique=False, fractional=False, trim="-")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def norms_csv_text(series: NormSeries) -> str:
    lines = ["t,l2_u,h1_u,h2_u,weighted"]
    for i in range(len(series)):
        lines.append(",".join(_fmt(v) for v in (series.t[i], series.l2_u[i], series.h1_u[i],
                                                 series.h2_u[i], series.weighted[i])))
    return "\n".join(lines) + "\n"


def snapshots_csv_text(snapshots, grid: SpatialGrid) -> str:
    x = np.concatenate(([0.0], grid.nodes, [grid.ell]))
    lines = ["t,x,u"]
    for t, values in snapshots:
        u = np.concatenate(([0.0], values, [0.0]))
        ts = _fmt(t)
        lines.extend(f"{ts},{_fmt(xi)},{_fmt(ui)}" for xi, ui in zip(x, u))
    return "\n".join(lines) + "\n"


def meta_dict(result: RunResult) -> dict:
    return _jsonable({
        "artifact_version": __version__,
        "config": result.config.to_dict(),
        "status": result.status.as_dict(),
        "stability": result.stability.as_dict() if result.stability else None,
        "decay": result.decay.as_dict() if result.decay else None,
        "metadata": result.metadata,
    })


def emit(result: RunResult, out_dir) -> list[Path]:
    """Write norms.csv, snapshots.csv and meta.json into ``out_dir``.

    Files are written to temporaries and renamed; on failure nothing
    partial is left behind.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = result.grid or SpatialGrid(result.config.n, result.config.params.ell)
    contents = {
        "norms.csv": norms_csv_text(result.norm_series),
        "snapshots.csv": snapshots_csv_text(result.snapshots, grid),
        "meta.json": json.dumps(meta_dict(result), indent=2, sort_keys=True) + "\n",
    }
    written: list[Path] = []
    temps: list[str] = []
    try:
        staged = []
        for name, text in contents.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
            temps.append(tmp)
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
        for tmp, final in staged:
            os.replace(tmp, final)
            written.append(final)
    except OSError:
        for path in temps:
            if os.path.exists(path):
                os.remove(path)
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def read_norms_csv(path) -> NormSeries:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return NormSeries(*(data[:, j].copy() for j in range(5)))


# ---------------------------------------------------------------------------
# config files


def _floats(text: str) -> tuple:
    text = text.strip()
    return tuple(float(v) for v in text.split(",") if v.strip()) if text else ()


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep T_end case
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    try:
        p = parser["params"]
        params = ModelParams(float(p["nu"]), float(p["mu"]), float(p.get("tau", "0")), float(p.get("ell", "1")))
        pr = parser["profile"]
        profile = DampingProfile(pr["family"], _floats(pr["coefficients"]), float(pr.get("ell", params.ell)))
        h = parser["history"] if parser.has_section("history") else {}
        history = HistorySpec(
            kind=h.get("kind", "constant"),
            phi=h.get("phi", "sin"),
            phi_params=_floats(h.get("phi_params", "1")),
            psi=h.get("psi", "one"),
            psi_params=_floats(h.get("psi_params", "")),
            amplitude=float(h.get("amplitude", "1")),
            ell=float(h.get("ell", params.ell)),
        )
        r = parser["run"] if parser.has_section("run") else {}
        return RunConfig(
            params, profile, history,
            n=int(r.get("n", DEFAULT_N)),
            dt=float(r.get("dt", DEFAULT_DT)),
            T_end=float(r.get("T_end", DEFAULT_T_END)),
            bdf_order=int(r.get("bdf_order", 2)),
            snapshot_every=int(r.get("snapshot_every", 100)),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config {path}: {exc}") from exc


def dump_config(config: RunConfig) -> str:
    def join(values):
        return ", ".join(repr(float(v)) for v in values)

    h = config.history
    p = config.params
    return (
        "[params]\n"
        f"nu = {p.nu!r}\nmu = {p.mu!r}\ntau = {p.tau!r}\nell = {p.ell!r}\n\n"
        "[profile]\n"
        f"family = {config.profile.family}\ncoefficients = {join(config.profile.coefficients)}\n\n"
        "[history]\n"
        f"kind = {h.kind}\nphi = {h.phi}\nphi_params = {join(h.phi_params)}\n"
        f"psi = {h.psi}\npsi_params = {join(h.psi_params)}\namplitude = {h.amplitude!r}\n\n"
        "[run]\n"
        f"n = {config.n}\ndt = {config.dt!r}\nT_end = {config.T_end!r}\n"
        f"bdf_order = {config.bdf_order}\nsnapshot_every = {config.snapshot_every}\n"
    )
