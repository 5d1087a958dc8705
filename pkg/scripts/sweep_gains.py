"""Sweep the forgetting factor and the encirclement gain over a grid.

Prints one line per (gamma1, alpha) with steady-state errors and the number
of analysis violations. Values outside the admissible ranges are reported as
gate errors rather than run.

    python scripts/sweep_gains.py --gammas 0.2 0.35 0.45 0.5 --alphas -0.3 -0.001 0.3
"""
import argparse
import itertools
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from rangeguard import load_config, run_scenario
from rangeguard.estimator import GateError
from rangeguard.verify import verify_run

ROOT = Path(__file__).resolve().parents[1]


def one(job):
    path, g, a = job
    try:
        cfg = load_config(path).with_overrides(gamma1=g, alpha=a)
    except GateError as exc:
        return g, a, None, str(exc)
    log = run_scenario(cfg)
    rep = verify_run(log, g, a, cfg.t, cfg.estimator.vmax2, cfg.vmax1)
    return g, a, rep, log.takedown_step


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "reference.toml"))
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.2, 0.35, 0.45, 0.5])
    ap.add_argument("--alphas", type=float, nargs="+", default=[-0.3, -0.001, 0.3])
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    jobs = [(args.config, g, a) for g, a in itertools.product(args.gammas, args.alphas)]
    with ProcessPoolExecutor(args.workers) as pool:
        for g, a, rep, extra in pool.map(one, jobs):
            if rep is None:
                print(f"gamma1={g:<5} alpha={a:<7} {extra}")
                continue
            t2 = rep.steady.get("target2", {})
            print(f"gamma1={g:<5} alpha={a:<7} ep_rms={t2.get('e_p_rms', float('nan')):.4f} "
                  f"ep_max={t2.get('e_p_max', float('nan')):.4f} "
                  f"ebar_max={t2.get('ebar_max', float('nan')):.4f} "
                  f"violations={len(rep.violations)} takedown={extra}")


if __name__ == "__main__":
    main()
