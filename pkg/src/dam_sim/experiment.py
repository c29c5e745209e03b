"""Monte Carlo sweeps of DAM and OFDM spectral efficiency."""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .beamforming import InfeasibleZF, design
from .channel import MultipathChannel, sample_channel
from .config import ExperimentConfig
from .link import (
    dam_waveform,
    generate_symbols,
    ofdm_waveform,
    papr_at,
    papr_samples,
    simulate_link,
)
from .ofdm import (
    dam_overhead,
    dam_spectral_efficiency,
    ofdm_overhead,
    ofdm_spectral_efficiency,
)
from .precoding import DamPrecoder

__all__ = [
    "CSV_COLUMNS",
    "SweepRow",
    "SweepResult",
    "trial_seed",
    "trial_channel",
    "run_trial",
    "run_sweep",
    "emit_outputs",
    "papr_comparison",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "sweep_var",
    "value",
    "scheme",
    "mean_se_bps_hz",
    "stderr_se",
    "trials",
    "overhead_fraction",
    "infeasible_zf_count",
)


@dataclass(frozen=True)
class SweepRow:
    sweep_var: str
    value: int
    scheme: str
    mean_se: float
    stderr_se: float
    trials: int
    overhead_fraction: float
    infeasible_zf_count: int

    def as_csv(self) -> list[str]:
        return [
            self.sweep_var,
            str(self.value),
            self.scheme,
            repr(self.mean_se),
            repr(self.stderr_se),
            str(self.trials),
            repr(self.overhead_fraction),
            str(self.infeasible_zf_count),
        ]


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[SweepRow]
    # per (value, scheme): per-trial SE in trial order (NaN where ZF was infeasible)
    samples: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    link_level: list[dict] = field(default_factory=list)
    papr: list[dict] = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    def mean(self, value: int, scheme: str) -> float:
        for r in self.rows:
            if r.value == value and r.scheme == scheme:
                return r.mean_se
        raise KeyError((value, scheme))

    def series(self, scheme: str) -> tuple[list[int], list[float]]:
        rows = [r for r in self.rows if r.scheme == scheme]
        return [r.value for r in rows], [r.mean_se for r in rows]


def trial_seed(base_seed: int, point: int, trial: int) -> np.random.SeedSequence:
    """Independent stream per (sweep point, trial)."""
    return np.random.SeedSequence([base_seed, point, trial])


def trial_channel(cfg: ExperimentConfig, point: int, value: int, trial: int) -> MultipathChannel:
    return sample_channel(trial_seed(cfg.base_seed, point, trial), cfg.channel_params(value))


def run_trial(cfg: ExperimentConfig, point: int, value: int, trial: int) -> dict[str, float]:
    """SE of every configured scheme on one channel draw (common random numbers).

    ``DAM-ZF`` is reported as NaN when the ISI-ZF design is infeasible.
    """
    ch = trial_channel(cfg, point, value, trial)
    budget = cfg.link_budget.build()
    frame = cfg.frame.build()
    out = {}
    for scheme in cfg.schemes:
        if scheme == "OFDM-WF":
            out[scheme] = ofdm_spectral_efficiency(ch, frame, cfg.ofdm.build(), budget.power, budget.sigma2)
            continue
        try:
            gamma = design(scheme.split("-")[1], ch, budget.power, budget.sigma2).analytic_sinr
        except InfeasibleZF:
            out[scheme] = math.nan
            continue
        out[scheme] = dam_spectral_efficiency(gamma, frame, cfg.delay_bound)
    return out


def _trial_task(args) -> dict[str, float]:
    return run_trial(*args)


def _overhead(cfg: ExperimentConfig, scheme: str) -> float:
    n_c = cfg.frame.build().n_c
    if scheme == "OFDM-WF":
        return ofdm_overhead(n_c, cfg.ofdm.build())
    return dam_overhead(n_c, cfg.delay_bound)


def _aggregate(values: np.ndarray) -> tuple[float, float, int]:
    ok = values[~np.isnan(values)]
    n = int(ok.size)
    if n == 0:
        return math.nan, math.nan, 0
    mean = math.fsum(ok.tolist()) / n
    if n == 1:
        return mean, 0.0, 1
    var = math.fsum(((ok - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var / n), n


def run_sweep(cfg: ExperimentConfig, link_level: bool | None = None) -> SweepResult:
    """Run every (sweep point, trial) and aggregate per scheme.

    Trials are independent; with ``cfg.workers > 1`` they run on a process
    pool. Results are collected in task order, so output does not depend on
    scheduling.
    """
    cfg.validate()
    tasks = [
        (cfg, p, int(v), t)
        for p, v in enumerate(cfg.sweep.values)
        for t in range(cfg.trials)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (8 * cfg.workers))))
    else:
        results = [_trial_task(t) for t in tasks]

    rows: list[SweepRow] = []
    samples: dict[tuple[int, str], np.ndarray] = {}
    for p, v in enumerate(cfg.sweep.values):
        chunk = results[p * cfg.trials:(p + 1) * cfg.trials]
        for scheme in cfg.schemes:
            vals = np.array([r[scheme] for r in chunk], dtype=float)
            samples[(int(v), scheme)] = vals
            mean, err, n = _aggregate(vals)
            infeasible = int(np.isnan(vals).sum()) if scheme == "DAM-ZF" else 0
            rows.append(SweepRow(cfg.sweep.variable, int(v), scheme, mean, err, n,
                                 _overhead(cfg, scheme), infeasible))
        log.info("sweep point %s=%s done", cfg.sweep.variable, v)

    res = SweepResult(cfg, rows, samples)
    if cfg.link_level.enabled if link_level is None else link_level:
        _run_link_level(cfg, res)
    return res


def _run_link_level(cfg: ExperimentConfig, res: SweepResult) -> None:
    """Measured-vs-analytic SINR and PAPR on the first channel of each point."""
    budget = cfg.link_budget.build()
    frame = cfg.frame.build()
    guard = 2 * cfg.delay_bound
    for p, v in enumerate(cfg.sweep.values):
        ch = trial_channel(cfg, p, int(v), 0)
        for scheme in cfg.schemes:
            if scheme == "OFDM-WF":
                continue
            try:
                bf = design(scheme.split("-")[1], ch, budget.power, budget.sigma2)
            except InfeasibleZF:
                continue
            rep = simulate_link(ch, bf.precoder, budget.sigma2, cfg.link_level.n_symbols,
                                frame.n_c, guard, seed=[cfg.base_seed, p, 1])
            res.link_level.append({
                "value": int(v),
                "scheme": scheme,
                "analytic_sinr_db": 10 * math.log10(bf.analytic_sinr),
                "measured_sinr_db": rep.measured_sinr_db,
                "residual_isi_power": rep.residual_isi_power,
                "evm": rep.evm,
            })
        res.papr.append({"value": int(v), **papr_comparison(cfg, ch, seed=[cfg.base_seed, p, 2])})


def papr_comparison(cfg: ExperimentConfig, ch: MultipathChannel, seed=None, scheme: str = "MMSE") -> dict:
    """CCDF of DAM (given scheme) versus OFDM at the configured window."""
    ll = cfg.link_level
    budget = cfg.link_budget.build()
    ss = np.random.SeedSequence(seed)
    s_seed, o_seed = ss.spawn(2)
    bf = design(scheme, ch, budget.power, budget.sigma2)
    # PAPR is per antenna, so only a few antennas need synthesising
    A = min(ll.papr_antennas, ch.num_antennas)
    sub = DamPrecoder(bf.precoder.beamformers[:, :A], bf.precoder.comp_delays, budget.power)
    n = ll.papr_samples
    guard = 2 * int(sub.comp_delays.max())
    stream = generate_symbols(n, "QPSK", np.random.default_rng(s_seed))
    dam = dam_waveform(stream, sub, n + guard, guard)
    # drop the guard tail so only steady transmission is measured
    dam = type(dam)(dam.samples[:, :n], dam.sample_rate)
    K = cfg.ofdm.num_subcarriers
    ofdm = ofdm_waveform(math.ceil(n / K), K, 0, "QPSK", np.random.default_rng(o_seed))
    dv = papr_samples(dam, ll.window, ll.oversample)
    ov = papr_samples(ofdm, ll.window, ll.oversample)
    with np.errstate(divide="ignore"):
        ddb, odb = 10 * np.log10(dv), 10 * np.log10(ov)
    thr = list(ll.thresholds_db)
    return {
        "thresholds_db": thr,
        "dam_ccdf": [float(np.mean(ddb > t)) for t in thr],
        "ofdm_ccdf": [float(np.mean(odb > t)) for t in thr],
        "dam_papr_1e-3_db": papr_at(dv, 1e-3),
        "ofdm_papr_1e-3_db": papr_at(ov, 1e-3),
    }


def write_csv(res: SweepResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in res.rows:
            w.writerow(r.as_csv())


def _plot_se(res: SweepResult, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "dam-sim"
    fig, ax = plt.subplots(figsize=(6, 4.2))
    markers = {"DAM-ZF": "o", "DAM-MRT": "s", "DAM-MMSE": "^", "OFDM-WF": "x"}
    for scheme in res.config.schemes:
        xs, ys = res.series(scheme)
        ax.plot(xs, ys, marker=markers.get(scheme, "."), label=scheme)
    var = res.config.sweep.variable
    ax.set_xlabel("number of antennas M" if var == "M" else "number of paths L")
    ax.set_ylabel("average spectral efficiency (bps/Hz)")
    ax.grid(True, alpha=0.3)
    if res.config.schemes:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_papr(res: SweepResult, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "dam-sim"
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for entry in res.papr:
        t = entry["thresholds_db"]
        label = f"{res.config.sweep.variable}={entry['value']}"
        ax.semilogy(t, np.maximum(entry["dam_ccdf"], 1e-7), "-o", label=f"DAM {label}")
        ax.semilogy(t, np.maximum(entry["ofdm_ccdf"], 1e-7), "--x", label=f"OFDM {label}")
    ax.set_xlabel("PAPR threshold (dB)")
    ax.set_ylabel("CCDF")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_outputs(res: SweepResult, out_dir, plots: bool = True) -> dict[str, Path]:
    """Write ``results.csv``, ``manifest.json`` and SVG plots into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"csv": out / "results.csv", "manifest": out / "manifest.json"}
        write_csv(res, paths["csv"])
        manifest = {
            "config": res.config.to_dict(),
            "config_hash": res.config_hash,
            "base_seed": res.config.base_seed,
            "code_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "n_c": res.config.frame.build().n_c,
            "columns": list(CSV_COLUMNS),
        }
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        if res.link_level:
            paths["link_level"] = out / "link_level.csv"
            with open(paths["link_level"], "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(res.link_level[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(res.link_level)
        if res.papr:
            paths["papr"] = out / "papr_ccdf.csv"
            with open(paths["papr"], "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["value", "threshold_db", "dam_ccdf", "ofdm_ccdf"])
                for e in res.papr:
                    for t, d, o in zip(e["thresholds_db"], e["dam_ccdf"], e["ofdm_ccdf"]):
                        w.writerow([e["value"], repr(float(t)), repr(d), repr(o)])
        if plots:
            paths["se_plot"] = out / f"se_vs_{res.config.sweep.variable}.svg"
            _plot_se(res, paths["se_plot"])
            if res.papr:
                paths["papr_plot"] = out / "papr_ccdf.svg"
                _plot_papr(res, paths["papr_plot"])
    except OSError as exc:
        raise OSError(f"could not write outputs to {out}: {exc}") from exc
    return paths
