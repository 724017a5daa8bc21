"""Run-directory persistence.

Layout per run::

    <out>/run0/plan.json        split plan
    <out>/run0/messages.log     coordinator message log, one frame per line
    <out>/run0/metrics.json     metrics; wall-clock values under "timing"
    <out>/run0/confusion.csv    labeled C x C grid
    <out>/run0/models/          serialized global + local models
    <out>/summary.csv           metric, mean, std across runs
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .learners import model_to_json
from .metrics import METRIC_FIELDS, MetricsReport, RunSummary

CONVENTIONS = {"std": "population (divisor R)",
               "zero_division": "undefined per-class metrics count as 0",
               "roc_auc": "one-vs-rest, macro-averaged"}


def metrics_to_dict(report: MetricsReport, include_timing: bool = True) -> dict:
    doc = {name: getattr(report, name) for name in METRIC_FIELDS}
    doc["zero_division_classes"] = report.zero_division_classes
    doc["confusion"] = report.confusion.astype(int).tolist()
    doc["conventions"] = CONVENTIONS
    if include_timing:
        doc["timing"] = {"train_time_seconds": report.train_time_seconds}
    return doc


def metrics_json_bytes(report: MetricsReport,
                       include_timing: bool = True) -> bytes:
    doc = metrics_to_dict(report, include_timing)
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()


def strip_timing(metrics_doc: dict) -> dict:
    return {k: v for k, v in metrics_doc.items() if k != "timing"}


def write_confusion_csv(path, confusion, label_vocab) -> None:
    labels = list(label_vocab) or [str(i) for i in range(len(confusion))]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for name, row in zip(labels, confusion):
            writer.writerow([name] + [int(v) for v in row])


def write_run_dir(out_dir, run, label_vocab) -> Path:
    """Persist a FederationRun."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run.plan.save(out / "plan.json")
    with open(out / "messages.log", "w") as fh:
        for line in run.message_log:
            fh.write(line + "\n")
    with open(out / "metrics.json", "wb") as fh:
        fh.write(metrics_json_bytes(run.metrics))
    write_confusion_csv(out / "confusion.csv", run.metrics.confusion,
                        label_vocab)
    models = out / "models"
    models.mkdir(exist_ok=True)
    with open(models / "global.json", "w") as fh:
        fh.write(model_to_json(run.global_model, label_vocab=label_vocab))
    with open(models / "local_descriptors.json", "w") as fh:
        json.dump(run.local_descriptors, fh, indent=2)
    for i, model in enumerate(run.local_models):
        if model is None:
            continue
        cfg = run.local_descriptors[i].get("hyperparameters")
        with open(models / f"local{i + 1}.json", "w") as fh:
            fh.write(model_to_json(model, hyperparameters=cfg,
                                   label_vocab=label_vocab))
    with open(out / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "accuracy"])
        for e, (loss, acc) in enumerate(zip(run.global_trace.loss,
                                            run.global_trace.accuracy)):
            writer.writerow([e, repr(loss), repr(acc)])
    return out


def write_baseline_dir(out_dir, model, report: MetricsReport, label_vocab,
                       hyperparameters=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.json", "wb") as fh:
        fh.write(metrics_json_bytes(report))
    write_confusion_csv(out / "confusion.csv", report.confusion, label_vocab)
    models = out / "models"
    models.mkdir(exist_ok=True)
    with open(models / "baseline.json", "w") as fh:
        fh.write(model_to_json(model, hyperparameters=hyperparameters,
                               label_vocab=label_vocab))
    return out


def write_summary_csv(path, summary: RunSummary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std"])
        for name, mean, std in summary.rows():
            writer.writerow([name, repr(float(mean)), repr(float(std))])


def load_metrics(run_dir) -> dict:
    with open(Path(run_dir) / "metrics.json") as fh:
        return json.load(fh)
