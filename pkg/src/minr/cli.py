"""Command-line interface: pretrain, encode, reconstruct, metrics, project, select."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checkpoint, metrics, training, volume
from .analysis import param_matrix, pca_project, select_timesteps, tsne_project
from .errors import MinrError
from .siren import siren_schema
from .volume import load_descriptor, load_raw, retained_fraction, write_raw

log = logging.getLogger("minr")

META_RANGE = (-1.0, 1.0)  # meta checkpoints predict normalized values


def _add_network_flags(p):
    p.add_argument("--layers", type=int, default=7, help="weight layers (default 7)")
    p.add_argument("--hidden", type=int, default=256, help="hidden width (default 256)")
    p.add_argument("--omega", type=float, default=30.0, help="sine frequency scale")


def _schema_from_args(args):
    return siren_schema(hidden=args.hidden, layers=args.layers, omega=args.omega)


def _worker_count(args):
    env = os.environ.get("MINR_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, args.workers)


def cmd_pretrain(args):
    desc = load_descriptor(args.dataset)
    config = training.MetaConfig(
        lambda_s=args.lambda_s,
        lambda_t=args.lambda_t,
        alpha=args.alpha,
        beta=args.beta,
        inner_steps=args.inner_steps,
        outer_steps=args.outer_steps,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    fraction = retained_fraction(desc, config.lambda_s, config.lambda_t)
    log.info("dataset %s: %d members %s", desc.name, desc.count, desc.dims)
    log.info("subsample fraction: %.6f (lambda_s=%d, lambda_t=%d)",
             fraction, config.lambda_s, config.lambda_t)
    t0 = time.perf_counter()

    def progress(step, members):
        if (step + 1) % max(1, args.log_every) == 0:
            log.info("outer step %d/%d (%.1fs)", step + 1, config.outer_steps,
                     time.perf_counter() - t0)

    theta = training.meta_pretrain(desc, config, schema=_schema_from_args(args),
                                   progress=progress)
    checkpoint.write_checkpoint(args.out, theta, META_RANGE)
    log.info("wrote meta checkpoint %s (%d parameters, %.1fs)",
             args.out, theta.size, time.perf_counter() - t0)
    return 0


def cmd_encode(args):
    desc = load_descriptor(args.dataset)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    config = training.FinetuneConfig(
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        mode=args.finetune_mode,
    )
    workers = _worker_count(args)
    t0 = time.perf_counter()

    if args.from_scratch:
        schema = _schema_from_args(args)

        def encode_one(index):
            return _scratch_member(desc, index, config, schema, args.scratch_lr)
    else:
        meta_params, _ = checkpoint.read_checkpoint(args.meta)

        def encode_one(index):
            return training.encode_member(desc, index, meta_params, config)

    models, failures = [], []
    if workers == 1:
        for index in range(desc.count):
            try:
                models.append(encode_one(index))
            except Exception as e:
                failures.append((index, str(e)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {index: pool.submit(encode_one, index)
                       for index in range(desc.count)}
            for index in range(desc.count):
                try:
                    models.append(futures[index].result())
                except Exception as e:
                    failures.append((index, str(e)))
    for m in models:
        log.info("member %d: %.1fs, train mse %.3g",
                 m.member_index, m.seconds, m.final_mse)

    for m in models:
        checkpoint.write_checkpoint(outdir / checkpoint.member_filename(m.member_index),
                                    m.params, m.value_range)
    csv_path = outdir / "timing.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["member_index", "seconds", "final_train_mse"])
        for m in models:
            writer.writerow([m.member_index, f"{m.seconds:.6f}", f"{m.final_mse:.10g}"])
    log.info("encoded %d/%d members into %s (%.1fs total)",
             len(models), desc.count, outdir, time.perf_counter() - t0)
    for index, message in failures:
        log.error("member %d failed: %s", index, message)
    return 0 if not failures else 1


def _scratch_member(desc, index, config, schema, lr):
    raw = desc.load_member(index)
    vol = volume.normalize(raw)
    steps = config.epochs * max(1, -(-vol.size // config.batch_size))
    t0 = time.perf_counter()
    theta = training.train_scratch(vol, steps, optimizer="adam", lr=lr,
                                   batch_size=config.batch_size,
                                   seed=training.member_seed(config.seed, index),
                                   schema=schema)
    seconds = time.perf_counter() - t0
    final = training.full_volume_mse(theta, vol)
    return training.AdaptedModel(index, theta, vol.value_range, seconds, final)


def cmd_reconstruct(args):
    params, value_range = checkpoint.read_checkpoint(args.model)
    vol = metrics.reconstruct_volume(params, args.dims, value_range, clamp=args.clamp)
    write_raw(vol, args.out)
    log.info("wrote %s (%d x %d x %d)", args.out, *vol.dims)
    return 0


def cmd_metrics(args):
    desc = load_descriptor(args.dataset)
    models = checkpoint.load_model_dir(args.models)
    reports = []
    for index, params, value_range in models:
        gt = desc.load_member(index)
        report = metrics.evaluate_member(params, gt, args.iso,
                                         value_range=value_range,
                                         member_index=index, clamp=args.clamp)
        cd = "n/a" if report.chamfer is None else f"{report.chamfer:.4f}"
        log.info("member %d: psnr %.2f dB, cd %s, mse %.3g",
                 index, report.psnr_db, cd, report.mse)
        reports.append(report)
    metrics.write_metrics_csv(reports, args.out)
    mean_psnr = np.mean([r.psnr_db for r in reports])
    log.info("wrote %s (mean psnr %.2f dB)", args.out, mean_psnr)
    return 0


def _load_matrix(args):
    models = checkpoint.load_model_dir(args.models)
    return param_matrix((idx, params) for idx, params, _ in models)


def _member_labels(args, member_ids):
    if not getattr(args, "dataset", None):
        return None
    desc = load_descriptor(args.dataset)
    if desc.labels is None:
        return None
    return [desc.labels[i] for i in member_ids]


def cmd_project(args):
    matrix = _load_matrix(args)
    labels = _member_labels(args, matrix.member_ids)
    if args.method == "pca":
        proj = pca_project(matrix, standardize=args.standardize, labels=labels)
    else:
        proj = tsne_project(matrix, perplexity=args.perplexity,
                            iterations=args.iterations, seed=args.seed,
                            standardize=args.standardize, labels=labels)
    label_keys = []
    if labels:
        label_keys = sorted({k for row in labels for k in row})
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["member_index", "x", "y", *label_keys])
        for row, member in enumerate(proj.member_ids):
            extra = [labels[row].get(k, "") for k in label_keys] if labels else []
            writer.writerow([member, f"{proj.points[row, 0]:.10g}",
                             f"{proj.points[row, 1]:.10g}", *extra])
    log.info("wrote %s (%s, %d members)", args.out, args.method, matrix.rows)
    return 0


def cmd_select(args):
    matrix = _load_matrix(args)
    result = select_timesteps(matrix, args.k)
    with open(args.out, "w") as f:
        json.dump(result.selected, f)
        f.write("\n")
    log.info("selected members %s -> %s", result.selected, args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="minr",
        description="Meta-initialized implicit neural volume representation",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="meta-pretrain an initialization on a dataset")
    p.add_argument("--dataset", required=True, help="descriptor JSON")
    p.add_argument("--out", required=True, help="output meta checkpoint (.minr)")
    p.add_argument("--lambda-s", type=int, default=4, dest="lambda_s")
    p.add_argument("--lambda-t", type=int, default=2, dest="lambda_t")
    p.add_argument("--alpha", type=float, default=1e-4, help="inner learning rate")
    p.add_argument("--beta", type=float, default=1e-4, help="outer learning rate")
    p.add_argument("--inner-steps", type=int, default=16)
    p.add_argument("--outer-steps", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=50)
    _add_network_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("encode", help="finetune per member and write checkpoints")
    p.add_argument("--dataset", required=True)
    p.add_argument("--meta", help="meta checkpoint (required unless --from-scratch)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=16)
    p.add_argument("--batch-size", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--finetune-mode", choices=["epochs", "steps"], default="epochs")
    p.add_argument("--from-scratch", action="store_true",
                   help="train each member from scratch (Adam) instead")
    p.add_argument("--scratch-lr", type=float, default=1e-4)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel members (MINR_WORKERS env overrides)")
    _add_network_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("reconstruct", help="decode a checkpoint to a raw volume")
    p.add_argument("--model", required=True)
    p.add_argument("--dims", type=int, nargs=3, required=True, metavar=("NX", "NY", "NZ"))
    p.add_argument("--out", required=True)
    p.add_argument("--clamp", action="store_true", help="clamp to the stored range")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="PSNR / Chamfer distance per member")
    p.add_argument("--dataset", required=True)
    p.add_argument("--models", required=True, help="directory of member_*.minr")
    p.add_argument("--iso", type=float, default=0.0, help="isovalue for the CD surfaces")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--clamp", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("project", help="2-D projection of adapted parameters")
    p.add_argument("--models", required=True)
    p.add_argument("--method", choices=["pca", "tsne"], default="tsne")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--perplexity", type=float, default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--dataset", help="descriptor JSON supplying member labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("select", help="representative member selection")
    p.add_argument("--models", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        datefmt="%H:%M:%S",
    )
    if args.command == "encode" and not args.from_scratch and not args.meta:
        parser.error("encode requires --meta unless --from-scratch is given")
    try:
        return args.func(args)
    except MinrError as e:
        log.error("%s", e)
        return 1
    except OSError as e:
        log.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
