"""fedspike command line.

Exit codes: 0 success, 2 config error, 3 data error, 4 training failure,
5 audit failure.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .artifacts import (load_metrics, write_baseline_dir, write_run_dir,
                        write_summary_csv)
from .dataset import DatasetError, load_embedded, save_embedded
from .embeddings import METHODS, EmbeddingError
from .federation import (HttpTransport, ProtocolError, SplitPlan, audit_run,
                         make_split, run_federated_training)
from .federation.coordinator import NODE_IDS, FederationError
from .federation.split import SplitError
from .learners import LearnerConfig, TrainingError, learning_curve
from .learners.selection import SelectionError
from .metrics import aggregate_runs
from .mlp import MlpError
from .pipeline import run_baseline, run_federated_series
from .runconfig import ConfigError, RunConfig, build_dataset
from .sequences import SequenceError, write_fasta
from .synthdata import demo_corpus

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAIN = 4
EXIT_AUDIT = 5


class AuditFailure(RuntimeError):
    pass


def _run(func):
    try:
        func()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (SequenceError, DatasetError, EmbeddingError, SplitError,
            SelectionError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except (TrainingError, MlpError, FederationError, ProtocolError) as exc:
        click.echo(f"training failure: {exc}", err=True)
        sys.exit(EXIT_TRAIN)
    except AuditFailure as exc:
        click.echo(f"audit failure: {exc}", err=True)
        sys.exit(EXIT_AUDIT)


def _load_config(config, **overrides) -> RunConfig:
    cfg = RunConfig.load(config) if config else RunConfig()
    return cfg.with_overrides(**overrides)


@click.group()
def main():
    """Federated spike-variant classification toolkit."""


@main.command()
@click.option("--config", type=click.Path(exists=True),
              help="synthetic generator config JSON")
@click.option("--demo", is_flag=True,
              help="built-in 9-lineage demo corpus instead of a config")
@click.option("--per-class", default=300, show_default=True)
@click.option("--length", default=200, show_default=True)
@click.option("--noise", default=0.01, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--twins", is_flag=True,
              help="give the Epsilon pair an identical signature")
@click.option("--out", required=True, type=click.Path())
def synth(config, demo, per_class, length, noise, seed, twins, out):
    """Generate a labeled synthetic corpus as FASTA."""
    def body():
        if demo:
            run_seed = seed if seed is not None else 7
            corpus = demo_corpus(per_class=per_class, length=length,
                                 noise_rate=noise, seed=run_seed,
                                 twins=twins)
        elif config:
            from .sequences import load_synth_config, run_synth_config
            raw = load_synth_config(config)
            if seed is not None:
                raw["seed"] = seed
            corpus = run_synth_config(raw, Path(config).parent)
        else:
            raise ConfigError("synth needs --config or --demo")
        write_fasta(corpus, out)
        click.echo(f"wrote {len(corpus)} sequences to {out}")
    _run(body)


@main.command()
@click.option("--config", type=click.Path(exists=True))
@click.option("--input", "fasta", type=click.Path(exists=True),
              help="FASTA input (labels after '|' in headers)")
@click.option("--labels", type=click.Path(exists=True),
              help="sidecar id,label CSV")
@click.option("--method", type=click.Choice(METHODS), default=None)
@click.option("--k", type=int, default=None)
@click.option("--pad-len", type=int, default=None)
@click.option("--components", type=int, default=None,
              help="kernel PCA components (stringkernel only)")
@click.option("--out", required=True, type=click.Path(),
              help="output prefix (.csv + .json)")
def embed(config, fasta, labels, method, k, pad_len, components, out):
    """Embed a corpus into fixed-length numeric vectors."""
    def body():
        cfg = _load_config(config, **{
            "data.fasta": fasta, "data.labels": labels,
            "embedding.method": method, "embedding.k": k,
            "embedding.pad_len": pad_len,
            "embedding.components": components})
        ds = build_dataset(cfg)
        save_embedded(ds, out)
        click.echo(f"embedded {len(ds)} sequences, dim "
                   f"{ds.descriptor['dim']} -> {out}.csv")
    _run(body)


def _train_command(config, data, local, seed, runs, out, audit, stratified,
                   federated: bool):
    cfg = _load_config(
        config, **{"data.embedded": data, "seed": seed, "runs": runs,
                   "out": out, "audit": audit or None,
                   "local": {"kind": local} if local else None,
                   "stratified": stratified})
    if cfg.out is None:
        raise ConfigError("missing output directory (--out)")
    ds = build_dataset(cfg)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = cfg.resolved_seed()
    reports = []
    audit_ok = True
    if federated:
        series = run_federated_series(ds, cfg.local_configs(),
                                      cfg.global_config(), base_seed,
                                      cfg.runs, cfg.stratified)
        for r, (run_seed, run) in enumerate(series):
            run_dir = write_run_dir(out_dir / f"run{r}", run, ds.label_vocab)
            reports.append(run.metrics)
            if cfg.audit:
                data_mat = ds.to_labeled_matrix()
                shard_rows = np.concatenate(
                    [data_mat.x[list(s)] for s in run.plan.shard_idx[:3]])
                report = audit_run(run.message_log, shard_rows)
                with open(run_dir / "audit.json", "w") as fh:
                    json.dump(report.to_dict(), fh, indent=2)
                audit_ok = audit_ok and report.ok
    else:
        lc = cfg.local_configs()
        if not isinstance(lc, LearnerConfig):
            raise ConfigError("baseline mode takes a single learner config")
        for r in range(cfg.runs):
            model, report = run_baseline(ds, lc, base_seed + r,
                                         cfg.stratified)
            write_baseline_dir(out_dir / f"run{r}", model, report,
                               ds.label_vocab, hyperparameters=lc.to_dict())
            reports.append(report)
    summary = aggregate_runs(reports)
    write_summary_csv(out_dir / "summary.csv", summary)
    click.echo(f"{'federated' if federated else 'baseline'} "
               f"results over {summary.n_runs} run(s):")
    for name, mean, std in summary.rows():
        click.echo(f"  {name:24s} {mean:.3f} ± {std:.3f}")
    if cfg.audit:
        click.echo(f"privacy audit: {'pass' if audit_ok else 'FAIL'}")
        if not audit_ok:
            raise AuditFailure("shard data detected in the message log")


@main.command("fl-train")
@click.option("--config", type=click.Path(exists=True))
@click.option("--data", type=str, help="embedded dataset prefix")
@click.option("--local", type=click.Choice(["logreg", "tree", "forest", "gbt"]),
              default=None)
@click.option("--seed", type=int, default=None)
@click.option("--runs", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--audit", is_flag=True)
@click.option("--stratified/--no-stratified", default=None)
def fl_train(config, data, local, seed, runs, out, audit, stratified):
    """Federated training: 3 in-process nodes + stacking network."""
    _run(lambda: _train_command(config, data, local, seed, runs, out,
                                audit, stratified, federated=True))


@main.command("baseline-train")
@click.option("--config", type=click.Path(exists=True))
@click.option("--data", type=str)
@click.option("--learner", "local",
              type=click.Choice(["logreg", "tree", "forest", "gbt"]),
              default=None)
@click.option("--seed", type=int, default=None)
@click.option("--runs", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--stratified/--no-stratified", default=None)
def baseline_train(config, data, local, seed, runs, out, stratified):
    """Centralized training on the full 70% train split."""
    _run(lambda: _train_command(config, data, local, seed, runs, out,
                                False, stratified, federated=False))


@main.command()
@click.option("--data", required=True, type=str,
              help="embedded dataset prefix")
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
def split(data, seed, out):
    """Write plan.json and per-node shard datasets for networked mode."""
    def body():
        ds = load_embedded(data)
        mat = ds.to_labeled_matrix()
        run_seed = seed if seed is not None else RunConfig().resolved_seed()
        plan = make_split(len(ds), run_seed, True, labels=mat.y)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        plan.save(out_dir / "plan.json")
        for i, shard in enumerate(plan.shard_idx[:3]):
            save_embedded(ds.subset(shard), out_dir / f"shard{i + 1}")
        click.echo(f"plan + 3 node shards -> {out_dir}")
    _run(body)


@main.command()
@click.option("--listen", required=True, help="host:port")
@click.option("--shard", required=True, type=str,
              help="embedded dataset prefix holding this node's shard")
@click.option("--node-id", default="node1", show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="write the node-side message log here")
def node(listen, shard, node_id, log_path):
    """Serve one shard-local node over HTTP (blocking)."""
    def body():
        from .federation.nodes import NodeRuntime
        from .federation.service import serve_node
        ds = load_embedded(shard)
        runtime = NodeRuntime(node_id, ds.to_labeled_matrix())
        serve_node(listen, runtime, log_path)
    _run(body)


@main.command()
@click.option("--nodes", required=True,
              help="three node endpoints, comma separated")
@click.option("--data", required=True, type=str,
              help="full embedded dataset prefix (coordinator side)")
@click.option("--plan", "plan_path", type=click.Path(exists=True),
              default=None, help="reuse a saved split plan")
@click.option("--local", type=click.Choice(["logreg", "tree", "forest", "gbt"]),
              default="logreg", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--audit", is_flag=True)
def coordinate(nodes, data, plan_path, local, seed, out, audit):
    """Run one federation round against remote node processes."""
    def body():
        endpoints = [e.strip() for e in nodes.split(",") if e.strip()]
        if len(endpoints) < len(NODE_IDS):
            raise ProtocolError("insufficient_nodes",
                                f"need {len(NODE_IDS)} node endpoints, "
                                f"got {len(endpoints)}")
        urls = {nid: (ep if ep.startswith("http") else f"http://{ep}")
                for nid, ep in zip(NODE_IDS, endpoints)}
        ds = load_embedded(data)
        mat = ds.to_labeled_matrix()
        run_seed = seed if seed is not None else RunConfig().resolved_seed()
        plan = SplitPlan.load(plan_path) if plan_path else None
        transport = HttpTransport(urls)
        try:
            run = run_federated_training(
                ds, LearnerConfig(kind=local), RunConfig().global_config(),
                run_seed, transport=transport, plan=plan)
        finally:
            transport.close()
        run_dir = write_run_dir(Path(out), run, ds.label_vocab)
        if audit:
            shard_rows = np.concatenate(
                [mat.x[list(s)] for s in run.plan.shard_idx[:3]])
            report = audit_run(run.message_log, shard_rows)
            with open(run_dir / "audit.json", "w") as fh:
                json.dump(report.to_dict(), fh, indent=2)
            click.echo(f"privacy audit: {'pass' if report.ok else 'FAIL'}")
            if not report.ok:
                raise AuditFailure("shard data detected in the message log")
        click.echo(f"accuracy {run.metrics.accuracy:.3f} -> {run_dir}")
    _run(body)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
def evaluate(run_dir):
    """Print the stored metrics of a finished run."""
    def body():
        doc = load_metrics(run_dir)
        for name, value in doc.items():
            if name in ("confusion", "conventions", "timing"):
                continue
            click.echo(f"{name:24s} {value}")
        click.echo("confusion matrix:")
        for row in doc["confusion"]:
            click.echo("  " + " ".join(f"{v:5d}" for v in row))
    _run(body)


@main.command()
@click.option("--config", type=click.Path(exists=True))
@click.option("--data", type=str, default=None)
@click.option("--local", type=click.Choice(["logreg", "tree", "forest", "gbt"]),
              default=None)
@click.option("--fractions", default="0.2,0.4,0.6,0.8,1.0",
              show_default=True)
@click.option("--folds", default=3, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
def curves(config, data, local, fractions, folds, seed, out):
    """Emit learning-curve CSVs per local model plus the global trace."""
    def body():
        cfg = _load_config(config, **{
            "data.embedded": data, "seed": seed,
            "local": {"kind": local} if local else None})
        ds = build_dataset(cfg)
        fracs = [float(f) for f in fractions.split(",")]
        base_seed = cfg.resolved_seed()
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)

        run = run_federated_training(ds, cfg.local_configs(),
                                     cfg.global_config(), base_seed,
                                     cfg.stratified)
        with open(out_dir / "global_trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "accuracy"])
            for e, (loss, acc) in enumerate(zip(run.global_trace.loss,
                                                run.global_trace.accuracy)):
                writer.writerow([e, repr(loss), repr(acc)])

        mat = ds.to_labeled_matrix()
        lc = cfg.local_configs()
        lcs = [lc] * 3 if isinstance(lc, LearnerConfig) else lc
        for i, (shard_idx, shard_cfg) in enumerate(
                zip(run.plan.shard_idx[:3], lcs)):
            shard = mat.subset(list(shard_idx))
            rows = learning_curve(shard, shard_cfg, fracs, folds)
            with open(out_dir / f"local{i + 1}_curve.csv", "w",
                      newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["fraction", "train_acc", "val_acc"])
                for row in rows:
                    writer.writerow([row["fraction"],
                                     repr(row["train_acc"]),
                                     repr(row["val_acc"])])
        click.echo(f"curves -> {out_dir}")
    _run(body)


if __name__ == "__main__":
    main()
