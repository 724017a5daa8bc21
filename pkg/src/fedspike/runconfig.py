"""Run configuration: one JSON document drives every pipeline command.

CLI flags override config fields; FEDSPIKE_SEED is the seed fallback when
neither the config nor the command line provides one.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ValidationError, field_validator

from .dataset import EmbeddedDataset, embedded_from_corpus
from .embeddings import METHODS, embed_corpus
from .learners import LearnerConfig
from .mlp import TrainConfig
from .sequences import (apply_labels, load_labels_csv, pad_corpus,
                        parse_fasta, run_synth_config)

SEED_ENV = "FEDSPIKE_SEED"


class ConfigError(ValueError):
    pass


class DataSource(BaseModel):
    fasta: Optional[str] = None
    labels: Optional[str] = None      # sidecar id,label CSV
    synth: Optional[Union[str, dict]] = None
    embedded: Optional[str] = None    # prefix of a saved embedded dataset


class EmbeddingSpec(BaseModel):
    method: str = "ohe"
    k: Optional[int] = None
    pad_len: Optional[int] = None
    components: int = 500
    mismatches: int = 0

    @field_validator("method")
    @classmethod
    def _known_method(cls, v):
        if v not in METHODS:
            raise ValueError(
                f"unknown embedding method {v!r}; valid: {', '.join(METHODS)}")
        return v


class RunConfig(BaseModel):
    data: DataSource = DataSource()
    embedding: EmbeddingSpec = EmbeddingSpec()
    local: Union[dict, list] = {"kind": "logreg"}
    global_train: dict = {}
    runs: int = 1
    seed: Optional[int] = None
    stratified: bool = True
    out: Optional[str] = None
    audit: bool = False

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
            return cls.model_validate(raw)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **kwargs) -> "RunConfig":
        doc = self.model_dump()
        for key, value in kwargs.items():
            if value is None:
                continue
            if "." in key:
                section, field = key.split(".", 1)
                doc[section][field] = value
            else:
                doc[key] = value
        try:
            return RunConfig.model_validate(doc)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc

    def resolved_seed(self) -> int:
        if self.seed is not None:
            return self.seed
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                return int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"{SEED_ENV}={env!r} is not an integer") from exc
        return 0

    def local_configs(self):
        try:
            if isinstance(self.local, dict):
                return LearnerConfig.from_dict(self.local)
            return [LearnerConfig.from_dict(d) for d in self.local]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"local learner config: {exc}") from exc

    def global_config(self) -> TrainConfig:
        try:
            return TrainConfig.from_dict(self.global_train)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"global_train config: {exc}") from exc


def build_corpus(cfg: RunConfig, base_dir: Optional[Path] = None):
    src = cfg.data
    if src.synth is not None:
        synth = src.synth
        if isinstance(synth, str):
            path = Path(synth)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            from .sequences import load_synth_config
            synth = load_synth_config(path)
            base_dir = path.parent
        return run_synth_config(synth, base_dir)
    if src.fasta is not None:
        with open(src.fasta) as fh:
            corpus = parse_fasta(fh)
        if src.labels is not None:
            corpus = apply_labels(corpus, load_labels_csv(src.labels))
        return corpus
    raise ConfigError("config.data needs either 'fasta' or 'synth'")


def build_dataset(cfg: RunConfig, base_dir: Optional[Path] = None) -> EmbeddedDataset:
    if cfg.data.embedded is not None:
        from .dataset import load_embedded
        return load_embedded(cfg.data.embedded)
    corpus = build_corpus(cfg, base_dir)
    spec = cfg.embedding
    pad_len = spec.pad_len if spec.pad_len is not None else corpus.max_len
    corpus = pad_corpus(corpus, pad_len)
    x, descriptor = embed_corpus(corpus, spec.method, spec.k,
                                 spec.components, spec.mismatches)
    return embedded_from_corpus(corpus, x, descriptor)
