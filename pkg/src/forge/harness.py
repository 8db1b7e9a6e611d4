"""Experiment ladder: one classifier architecture trained per rendering
condition, evaluated on a fixed target-domain test set, reported as a table.

Report accuracy columns are deterministic for a given seed set; render cost
is reported as samples-per-pixel (a machine-independent cost proxy) so the
CSV is byte-for-byte reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import pipeline
from .adaptation import (
    GanConfig,
    expand_dataset,
    pretrain_generator,
    rank_checkpoints,
    refine,
    train_gan,
)
from .nn.train import (
    ClassifierConfig,
    TrainConfig,
    channel_stats,
    standardize,
    train_classifier_arrays,
)
from .pipeline import CONDITIONS, PipelineConfig

LADDER_ORDER = list(CONDITIONS)

# spp billed per training image for each condition (cost proxy column)
_RENDER_COST = {
    "albedo": 0, "sh": 0, "sh_ao": 0, "two_bounce": 1,
    "denoised_low": 1, "denoised_mid": 4, "gan_single": 1, "gan_ensemble": 1,
    "baseline_same_domain": 64,
}


@dataclass
class ExperimentConfig:
    condition: str = "gi_high"
    seed: int = 0
    ensemble_k: int = 4
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    denoiser: TrainConfig = field(default_factory=TrainConfig)
    gan: GanConfig = field(default_factory=GanConfig)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class ReportRow:
    condition: str
    accuracy: float
    baseline_pct: float  # accuracy / same-domain baseline accuracy
    render_spp: int
    seeds: str
    config_hash: str


def render_cost(condition: str, config: PipelineConfig) -> int:
    if condition in _RENDER_COST:
        return _RENDER_COST[condition]
    return config.spp[condition.split("_")[1]]


class LadderContext:
    """Rendered corpus plus lazily built shared artifacts (SH fit, denoisers,
    GAN refiners, clean classifier), reusable across classifier seeds."""

    def __init__(self, config: ExperimentConfig, entries=None):
        self.config = config
        pcfg = config.pipeline
        if entries is None:
            entries = pipeline.generate_entries(pcfg)[0]
        self.entries = entries
        self.train = pipeline.entries_of(entries, ("train", "val"))
        self.test = pipeline.entries_of(entries, "test")
        self.train_labels = pipeline.labels_of(self.train)
        self.test_labels = pipeline.labels_of(self.test)
        self.test_x = pipeline.target_images(self.test, pcfg)
        self._cache = {}

    def sh_coefficients(self):
        if "sh" not in self._cache:
            self._cache["sh"] = pipeline.fit_scene_lighting(
                self.entries, self.config.pipeline)
        return self._cache["sh"]

    def denoiser(self, tier):
        key = f"denoiser_{tier}"
        if key not in self._cache:
            xs, ys = pipeline.denoiser_io(self.train, tier,
                                          self.config.pipeline)
            mean, std = channel_stats(xs)
            ckpt = pretrain_generator(
                standardize(xs, mean, std), ys,
                replace(self.config.denoiser, seed=self.config.seed),
                norm={"mean": mean.tolist(), "std": std.tolist()})
            self._cache[key] = ckpt
        return self._cache[key]

    def denoiser_norm(self, ckpt):
        norm = ckpt.meta["norm"]
        return (np.array(norm["mean"], dtype=np.float32),
                np.array(norm["std"], dtype=np.float32))

    def denoised_images(self, tier):
        key = f"denoised_{tier}_x"
        if key not in self._cache:
            ckpt = self.denoiser(tier)
            xs, _ = pipeline.denoiser_io(self.train, tier,
                                         self.config.pipeline)
            out = refine(ckpt, standardize(xs, *self.denoiser_norm(ckpt)))
            self._cache[key] = self._to_classifier_space(out)
        return self._cache[key]

    def _to_classifier_space(self, nchw):
        pcfg = self.config.pipeline
        return np.stack([pipeline.to_classifier_space(
            im.transpose(1, 2, 0), pcfg).transpose(2, 0, 1)
            for im in nchw]).astype(np.float32)

    def clean_classifier(self):
        """Trained only on target-domain train/val images; never test."""
        if "clean" not in self._cache:
            pcfg = self.config.pipeline
            xs = pipeline.target_images(self.train, pcfg)
            n_val = max(1, len(xs) // 5)
            rng = np.random.default_rng(self.config.seed)
            perm = rng.permutation(len(xs))
            tr, va = perm[n_val:], perm[:n_val]
            ckpt, _ = train_classifier_arrays(
                xs[tr], self.train_labels[tr], xs[va], self.train_labels[va],
                replace(self.config.classifier, seed=self.config.seed))
            self._cache["clean"] = ckpt
        return self._cache["clean"]

    def gan_artifacts(self, tier="low"):
        key = f"gan_{tier}"
        if key not in self._cache:
            cfg = self.config
            gen = self.denoiser(tier)
            xs, ys = pipeline.denoiser_io(self.train, tier, cfg.pipeline)
            xs = standardize(xs, *self.denoiser_norm(gen))
            target = pipeline.target_images(self.train, cfg.pipeline)
            ckpts = train_gan(xs, ys, target,
                              replace(cfg.gan, seed=cfg.seed), gen)
            ranked = rank_checkpoints(
                ckpts, self.clean_classifier(), xs, self.train_labels,
                splits=[e.split for e in self.train],
                transform=self._to_classifier_space)
            self._cache[key] = (xs, ranked)
        return self._cache[key]

    def training_set(self, condition, k=None):
        """(images, labels) in classifier space for one ladder rung."""
        pcfg = self.config.pipeline
        if condition in ("denoised_low", "denoised_mid"):
            return self.denoised_images(condition.split("_")[1]), \
                self.train_labels
        if condition in ("gan_single", "gan_ensemble"):
            xs, ranked = self.gan_artifacts()
            k = 1 if condition == "gan_single" else \
                (k or self.config.ensemble_k)
            images, labels, _ = expand_dataset(ranked[:k], xs,
                                               self.train_labels)
            return self._to_classifier_space(images), labels
        sh = self.sh_coefficients() if condition in ("sh", "sh_ao") else None
        return pipeline.condition_images(self.train, condition, pcfg,
                                         sh_coeffs=sh), self.train_labels


def run_experiment(config: ExperimentConfig, context: LadderContext = None,
                   baseline_accuracy: float = None) -> ReportRow:
    context = context or LadderContext(config)
    train_x, train_y = context.training_set(config.condition)
    cls = replace(config.classifier, seed=config.seed)
    _, acc = train_classifier_arrays(train_x, train_y, context.test_x,
                                     context.test_labels, cls)
    base = baseline_accuracy if baseline_accuracy else acc \
        if config.condition == "baseline_same_domain" else float("nan")
    return ReportRow(condition=config.condition, accuracy=acc,
                     baseline_pct=100.0 * acc / base if base else float("nan"),
                     render_spp=render_cost(config.condition, config.pipeline),
                     seeds=str(config.seed), config_hash=config.hash())


def run_ladder(config: ExperimentConfig, conditions=None, seeds=None):
    """Every requested rung over every seed; returns mean-accuracy rows."""
    conditions = list(conditions or LADDER_ORDER)
    seeds = list(seeds if seeds is not None else [config.seed])
    unknown = set(conditions) - set(CONDITIONS)
    if unknown:
        raise ValueError(f"unknown conditions {sorted(unknown)}")
    per_seed = {c: [] for c in conditions}
    for seed in seeds:
        cfg = replace(config, seed=seed)
        ctx = LadderContext(cfg)
        for cond in conditions:
            train_x, train_y = ctx.training_set(cond)
            _, acc = train_classifier_arrays(
                train_x, train_y, ctx.test_x, ctx.test_labels,
                replace(cfg.classifier, seed=seed))
            per_seed[cond].append(acc)
    base = float(np.mean(per_seed["baseline_same_domain"])) \
        if "baseline_same_domain" in per_seed else float("nan")
    if not base > 0:
        base = float("nan")
    seed_tag = "+".join(str(s) for s in seeds)
    rows = [ReportRow(condition=c,
                      accuracy=float(np.mean(per_seed[c])),
                      baseline_pct=100.0 * float(np.mean(per_seed[c])) / base,
                      render_spp=render_cost(c, config.pipeline),
                      seeds=seed_tag, config_hash=config.hash())
            for c in conditions]
    return rows, per_seed


_COLUMNS = ["condition", "accuracy", "baseline_pct", "render_spp",
            "seeds", "config_hash"]


def emit_report(rows, csv_path=None, md_path=None):
    """Ladder-ordered CSV and Markdown report; returns (csv_text, md_text)."""
    rows = sorted(rows, key=lambda r: LADDER_ORDER.index(r.condition)
                  if r.condition in LADDER_ORDER else len(LADDER_ORDER))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for r in rows:
        w.writerow([r.condition, f"{r.accuracy:.4f}", f"{r.baseline_pct:.2f}",
                    r.render_spp, r.seeds, r.config_hash])
    csv_text = buf.getvalue()
    md = ["| Condition | Accuracy | Baseline % | Render spp |",
          "| --- | --- | --- | --- |"]
    for r in rows:
        md.append(f"| {r.condition} | {r.accuracy:.4f} | "
                  f"{r.baseline_pct:.2f}% | {r.render_spp} |")
    md_text = "\n".join(md) + "\n"
    if csv_path:
        with open(csv_path, "w", newline="") as f:
            f.write(csv_text)
    if md_path:
        with open(md_path, "w") as f:
            f.write(md_text)
    return csv_text, md_text


def read_report(csv_path):
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        return [ReportRow(condition=r["condition"],
                          accuracy=float(r["accuracy"]),
                          baseline_pct=float(r["baseline_pct"]),
                          render_spp=int(r["render_spp"]),
                          seeds=r["seeds"], config_hash=r["config_hash"])
                for r in reader]
