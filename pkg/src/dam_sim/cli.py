"""Command line entry point: ``dam-sim {sweep,verify,papr}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config


def _sweep(args) -> int:
    from .experiment import emit_outputs, run_sweep

    cfg = load_config(args.config)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.link_level:
        cfg.link_level.enabled = True
    cfg.validate()
    res = run_sweep(cfg)
    paths = emit_outputs(res, args.out, plots=not args.no_plots)
    for row in res.rows:
        print(f"{row.sweep_var}={row.value:<4d} {row.scheme:<9s} "
              f"SE={row.mean_se:8.4f} +- {row.stderr_se:.4f} bps/Hz")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0


def _verify(args) -> int:
    from .verify import run_checks

    failed = 0
    for name, ok, detail in run_checks():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def _papr(args) -> int:
    from .experiment import papr_comparison, trial_channel

    cfg = load_config(args.config)
    if args.window is not None:
        cfg.link_level.window = args.window
    if args.oversample is not None:
        cfg.link_level.oversample = args.oversample
    cfg.validate()
    value = cfg.sweep.values[0]
    ch = trial_channel(cfg, 0, value, 0)
    res = papr_comparison(cfg, ch, seed=[cfg.base_seed, 0, 2], scheme=args.scheme)
    print(f"M={ch.num_antennas} L={ch.num_paths} window={cfg.link_level.window} "
          f"oversample={cfg.link_level.oversample}")
    print(f"{'thr_dB':>7s} {'DAM':>10s} {'OFDM':>10s}")
    for t, d, o in zip(res["thresholds_db"], res["dam_ccdf"], res["ofdm_ccdf"]):
        print(f"{t:7.1f} {d:10.3e} {o:10.3e}")
    print(f"PAPR at CCDF 1e-3: DAM {res['dam_papr_1e-3_db']:.2f} dB, "
          f"OFDM {res['ofdm_papr_1e-3_db']:.2f} dB")
    if args.out:
        import csv
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "papr_ccdf.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold_db", "dam_ccdf", "ofdm_ccdf"])
            for row in zip(res["thresholds_db"], res["dam_ccdf"], res["ofdm_ccdf"]):
                w.writerow([repr(float(v)) for v in row])
        print(f"wrote {out / 'papr_ccdf.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dam-sim", description="Delay alignment modulation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="Monte Carlo spectral-efficiency sweep")
    s.add_argument("--config", default=None, help="YAML config (defaults if omitted)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--link-level", action="store_true", help="also run waveform-level SINR and PAPR")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=_sweep)

    v = sub.add_parser("verify", help="run the invariant self-checks")
    v.set_defaults(func=_verify)

    q = sub.add_parser("papr", help="PAPR CCDF of DAM versus OFDM")
    q.add_argument("--config", default=None)
    q.add_argument("--scheme", default="MMSE", choices=["ZF", "MRT", "MMSE"])
    q.add_argument("--window", type=int)
    q.add_argument("--oversample", type=int)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_papr)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
