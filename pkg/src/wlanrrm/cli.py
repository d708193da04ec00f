"""Command-line front end: train / eval / oracle / baseline / calibrate /
robustness / replay / compare / gen, each writing CSV outputs plus a JSON
run manifest into --out."""

import argparse
import csv
import dataclasses
import glob
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .agent import load_model
from .baselines import greedy, oracle, random_policy, static_daily
from .calibration import fit_threshold, load_telemetry, save_telemetry, synth_telemetry
from .environment import (DEFAULT_SPREAD_DB, DEFAULT_THRESHOLD_DBM, NeighborhoodModel,
                          NoiseSpec, evaluate, write_eval_record)
from .errors import CapacityError, CheckpointError, FormatError, ValidationError
from .harness import (DrlPolicy, GreedyPolicy, RandomPolicy, RunConfig, StaticPolicy,
                      compare, gen_diurnal_trace, load_trace, read_report, replay,
                      run_config, save_trace, two_phase_trace, write_effective_config,
                      write_report)
from .robustness import DEFAULT_MEANS, DEFAULT_STDS, read_grid_csv, report_grid, run_grid
from .seeds import derive_seed
from .topology import band_from_name, load_network, random_mesh_network, random_network, save_network
from .trainer import TrainConfig, evaluate_policy, train


def _manifest(out_dir, command, seed, config_doc, outputs):
    doc = {
        "package": "wlanrrm",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config_sha256": hashlib.sha256(
            json.dumps(config_doc, sort_keys=True).encode()).hexdigest(),
        "outputs": sorted(outputs),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    return path


def _resolve_env(args, rc):
    if getattr(args, "env", None) is not None or rc is None:
        kind = getattr(args, "env", None) or "threshold"
        return NeighborhoodModel(kind, args.threshold_dbm, args.spread_db)
    return rc.env


def _resolve_noise(args):
    if args.noise_std == 0.0 and args.noise_mean == 0.0:
        return None
    return NoiseSpec(args.noise_mean, args.noise_std, args.noise_seed)


def _load_eval_set(path):
    if os.path.isdir(path):
        files = sorted(glob.glob(os.path.join(path, "*.json")))
        if not files:
            raise ValidationError(f"{path}: no network JSON files found")
        return [load_network(p) for p in files]
    return [load_network(path)]


def _parse_grid(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValidationError(f"grid must look like -95:-60:0.5, got {text!r}") from None
    return lo, hi, step


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _add_env_flags(p):
    p.add_argument("--env", choices=["threshold", "sigmoid"], default=None,
                   help="neighborhood model (default: from --config, else threshold)")
    p.add_argument("--threshold-dbm", type=float, default=DEFAULT_THRESHOLD_DBM)
    p.add_argument("--spread-db", type=float, default=DEFAULT_SPREAD_DB)


def _add_noise_flags(p):
    p.add_argument("--noise-mean", type=float, default=0.0, help="observation noise mean (dB)")
    p.add_argument("--noise-std", type=float, default=0.0, help="observation noise std (dB)")
    p.add_argument("--noise-seed", type=int, default=0)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides --config)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--config", default=None, help="master run-config JSON")

    ap = argparse.ArgumentParser(prog="wlanrrm",
                                 description="Zero-touch WLAN channel/bonding toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train the agent")
    p.add_argument("--iterations", type=int, default=None, help="override config iterations")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on networks")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--eval-set", required=True, help="network JSON file or directory")
    p.add_argument("--k", type=int, default=8, help="stochastic rollouts per instance")
    _add_env_flags(p)
    _add_noise_flags(p)

    p = sub.add_parser("oracle", parents=[common], help="exhaustive optimum for one network")
    p.add_argument("--network", required=True)
    _add_env_flags(p)

    p = sub.add_parser("baseline", parents=[common], help="run a reference policy")
    p.add_argument("--policy", required=True, choices=["greedy", "random", "static"])
    p.add_argument("--network", default=None, help="network JSON (greedy/random)")
    p.add_argument("--trace", default=None, help="trace JSON (static forecast input)")
    _add_env_flags(p)

    p = sub.add_parser("calibrate", parents=[common], help="fit the sensing threshold")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--grid", default="-95:-60:0.5", help="lo:hi:step in dBm")

    p = sub.add_parser("robustness", parents=[common], help="observation-noise sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--eval-set", required=True, help="network JSON file or directory")
    p.add_argument("--env", choices=["threshold", "sigmoid"], default="threshold")
    p.add_argument("--means", type=_float_list, default=DEFAULT_MEANS)
    p.add_argument("--stds", type=_float_list, default=DEFAULT_STDS)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--k", type=int, default=8)

    p = sub.add_parser("replay", parents=[common], help="closed-loop trace replay")
    p.add_argument("--trace", required=True)
    p.add_argument("--policy", required=True, choices=["drl", "greedy", "static", "random"])
    p.add_argument("--checkpoint", default=None, help="required for --policy drl")
    p.add_argument("--k", type=int, default=8)
    _add_env_flags(p)
    _add_noise_flags(p)

    p = sub.add_parser("compare", parents=[common], help="compare two replay reports")
    p.add_argument("--report-a", required=True)
    p.add_argument("--report-b", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate synthetic inputs")
    p.add_argument("what", choices=["networks", "trace", "telemetry"])
    p.add_argument("--count", type=int, default=1, help="networks: how many files")
    p.add_argument("--n-aps", type=int, default=6)
    p.add_argument("--band", default="2g4", choices=["2g4", "5g"])
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--mesh-rssi", default=None,
                   help="lo,hi dBm: draw symmetric uniform RSSIs instead of geometry")
    p.add_argument("--slots", type=int, default=144, help="trace: number of slots")
    p.add_argument("--two-phase", action="store_true", help="trace: alternating hotspot trace")
    p.add_argument("--network", default=None, help="telemetry/trace: base network JSON")
    p.add_argument("--sigma-busy", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=10, help="telemetry: snapshots to emit")
    p.add_argument("--true-threshold", type=float, default=DEFAULT_THRESHOLD_DBM)
    return ap


def _load_rc(args):
    return run_config(args.config) if args.config else None


def _seed_of(args, rc):
    if args.seed is not None:
        return args.seed
    return rc.seed if rc is not None else 0


def cmd_train(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    base = rc.train if rc is not None else TrainConfig()
    updates = {"seed": seed}
    if args.iterations is not None:
        updates["iterations"] = args.iterations
    cfg = dataclasses.replace(base, **updates)
    os.makedirs(args.out, exist_ok=True)
    model, log = train(cfg, args.out, resume_from=args.resume)
    eff = os.path.join(args.out, "effective_config.json")
    if rc is not None:
        write_effective_config(dataclasses.replace(rc, seed=seed, train=cfg), eff)
    else:
        write_effective_config(RunConfig(seed=seed, band_name=cfg.band_name,
                                         env=cfg.env, train=cfg), eff)
    outputs = [os.path.join(args.out, "train_log.csv"), os.path.join(args.out, "eval_log.csv"), eff]
    _manifest(args.out, "train", seed, dataclasses.asdict(cfg), outputs)
    final = log.eval_rows[-1][1] if log.eval_rows else float("nan")
    print(f"trained {cfg.iterations} iterations; final eval regret {final:.4f}")
    return 0


def cmd_eval(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    env = _resolve_env(args, rc)
    model = load_model(args.checkpoint)
    nets = _load_eval_set(args.eval_set)
    noise = _resolve_noise(args)
    mean_regret, records = evaluate_policy(model, nets, env, noise=noise,
                                           k_rollouts=args.k, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "eval_records.csv")
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["instance", "regret"])
        for e, rec in enumerate(records):
            wr.writerow([e, repr(rec.regret)])
    _manifest(args.out, "eval", seed, {"checkpoint": args.checkpoint, "k": args.k}, [path])
    print(f"mean regret {mean_regret:.4f} over {len(nets)} instances")
    return 0


def cmd_oracle(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    env = _resolve_env(args, rc)
    net = load_network(args.network)
    cfg, regret = oracle(net, env)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "oracle_records.csv")
    write_eval_record(evaluate(net, cfg, env), path, policy="oracle")
    _manifest(args.out, "oracle", seed, {"network": args.network}, [path])
    print(f"oracle regret {regret:.4f}")
    return 0


def cmd_baseline(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    env = _resolve_env(args, rc)
    os.makedirs(args.out, exist_ok=True)
    if args.policy == "static":
        if not args.trace:
            raise ValidationError("--policy static needs --trace")
        trace = load_trace(args.trace)
        nets = trace.networks()
        cfg = static_daily(nets, env)
        forecast = trace.network.with_load(np.mean([n.load for n in nets], axis=0))
        rec = evaluate(forecast, cfg, env)
    else:
        if not args.network:
            raise ValidationError(f"--policy {args.policy} needs --network")
        net = load_network(args.network)
        cfg = greedy(net, env) if args.policy == "greedy" else random_policy(net, seed)
        rec = evaluate(net, cfg, env)
    path = os.path.join(args.out, f"baseline_{args.policy}_records.csv")
    write_eval_record(rec, path, policy=args.policy)
    _manifest(args.out, "baseline", seed, {"policy": args.policy}, [path])
    print(f"{args.policy} regret {rec.regret:.4f}")
    return 0


def cmd_calibrate(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    records = load_telemetry(args.telemetry)
    result = fit_threshold(records, _parse_grid(args.grid))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "calibration_curve.csv")
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["threshold_dbm", "similarity"])
        for t, s in result.curve:
            wr.writerow([repr(t), repr(s)])
    _manifest(args.out, "calibrate", seed,
              {"telemetry": args.telemetry, "grid": args.grid}, [path])
    print(f"best threshold {result.best_threshold_dbm:.1f} dBm "
          f"({result.n_records} records, {result.n_skipped} skipped)")
    return 0


def cmd_robustness(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    model = load_model(args.checkpoint)
    nets = _load_eval_set(args.eval_set)
    grid = run_grid(model, nets, args.env, means=args.means, stds=args.stds,
                    trials_per_cell=args.trials, seed=seed, k_rollouts=args.k)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "robustness_grid.csv")
    report_grid(grid, path)
    _manifest(args.out, "robustness", seed,
              {"checkpoint": args.checkpoint, "env": args.env,
               "means": list(args.means), "stds": list(args.stds), "trials": args.trials}, [path])
    print(f"baseline regret {grid.baseline_regret:.4f}; wrote {grid.cells.size} cells")
    return 0


def cmd_replay(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    env = _resolve_env(args, rc)
    trace = load_trace(args.trace)
    if args.policy == "drl":
        if not args.checkpoint:
            raise ValidationError("--policy drl needs --checkpoint")
        policy = DrlPolicy.from_checkpoint(args.checkpoint, k_rollouts=args.k)
    else:
        policy = {"greedy": GreedyPolicy, "static": StaticPolicy, "random": RandomPolicy}[args.policy]()
    report = replay(trace, policy, env, noise=_resolve_noise(args), seed=seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"replay_{args.policy}.csv")
    write_report(report, path)
    _manifest(args.out, "replay", seed, {"trace": args.trace, "policy": args.policy}, [path])
    print(f"{args.policy} mean regret {report.mean_regret():.4f} over {trace.n_slots} slots")
    return 0


def cmd_compare(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    report_a = read_report(args.report_a)
    report_b = read_report(args.report_b)
    compare(report_a, report_b, args.out)
    paths = [os.path.join(args.out, "compare_scatter.csv"),
             os.path.join(args.out, "compare_summary.csv")]
    _manifest(args.out, "compare", seed,
              {"report_a": args.report_a, "report_b": args.report_b}, paths)
    print(f"{report_a.policy} mean regret {report_a.mean_regret():.4f} vs "
          f"{report_b.policy} {report_b.mean_regret():.4f}")
    return 0


def cmd_gen(args):
    rc = _load_rc(args)
    seed = _seed_of(args, rc)
    band = band_from_name(args.band)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    if args.what == "networks":
        for k in range(args.count):
            if args.mesh_rssi:
                lo, hi = (float(v) for v in args.mesh_rssi.split(","))
                net = random_mesh_network(args.n_aps, band, rssi_range=(lo, hi),
                                          seed=derive_seed(seed, k))
            else:
                net = random_network(args.n_aps, band, density=args.density,
                                     seed=derive_seed(seed, k))
            path = os.path.join(args.out, f"network_{k:03d}.json")
            save_network(net, path)
            outputs.append(path)
    elif args.what == "trace":
        if args.two_phase:
            trace = two_phase_trace(n_slots=args.slots if args.slots != 144 else 24)
        else:
            net = load_network(args.network) if args.network else \
                random_network(args.n_aps, band, density=args.density, seed=seed,
                               load_range=(0.2, 0.6))
            trace = gen_diurnal_trace(net, n_slots=args.slots, seed=seed)
        path = os.path.join(args.out, "trace.json")
        save_trace(trace, path)
        outputs.append(path)
    else:
        if not args.network:
            raise ValidationError("gen telemetry needs --network")
        net = load_network(args.network)
        true_model = NeighborhoodModel.threshold(args.true_threshold)
        cfg = greedy(net, true_model)
        records = synth_telemetry(net, cfg, true_model, sigma_busy=args.sigma_busy,
                                  n_samples=args.samples, seed=seed)
        path = os.path.join(args.out, "telemetry.csv")
        save_telemetry(records, path)
        outputs.append(path)
    _manifest(args.out, f"gen {args.what}", seed, {"what": args.what}, outputs)
    print(f"wrote {len(outputs)} file(s) to {args.out}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "baseline": cmd_baseline,
    "calibrate": cmd_calibrate,
    "robustness": cmd_robustness,
    "replay": cmd_replay,
    "compare": cmd_compare,
    "gen": cmd_gen,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, FormatError, CheckpointError, CapacityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
