"""Batch robustness evaluation: embed -> attack -> detect over a corpus."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .. import attacks as A
from ..baselines import BaselineKind, baseline_detect, baseline_embed, make_payload
from ..errors import CorpusEmpty, IoFailure, MethodUnknown
from ..imaging import psnr, read_image, to_gray
from ..synthetic import desk_corpus, negative_control
from ..watermark import EmbedConfig, embed, verify
from .stats import coefficient_of_variation, compare, wilson_interval

CONFIG_VERSION = "fractalmark-config/1"
DEFAULT_METHODS = ("ours", "dct", "lsb", "dwt")
NEGATIVE = "negative_control"

PROTOCOLS = {
    # (images, iterations)
    "sec31": (None, 100),
    "sec44": (50, 20),
    "desk": (10, 5),
}


# --------------------------------------------------------------------------
# methods


class Method(Protocol):
    name: str

    def mark(self, img: np.ndarray):
        """Return ``(watermarked, state)``; ``state`` is whatever ``score`` needs."""

    def score(self, img: np.ndarray, state) -> float: ...


class FeatureMethod:
    name = "ours"

    def __init__(self, cfg: EmbedConfig | None = None):
        self.cfg = cfg or EmbedConfig()

    def mark(self, img):
        return embed(img, cfg=self.cfg)

    def score(self, img, state):
        return verify(img, state, self.cfg).r


class BaselineMethod:
    def __init__(self, kind, payload_seed: int = 0, strength: float | None = None):
        self.kind = BaselineKind.parse(kind)
        self.name = self.kind.value
        self.payload = make_payload(payload_seed)
        self.strength = strength

    def mark(self, img):
        return baseline_embed(img, self.kind, self.payload, self.strength), None

    def score(self, img, state):
        return baseline_detect(img, self.kind, self.payload, self.strength).r


_REGISTRY: dict[str, Callable[[], Method]] = {
    "ours": FeatureMethod,
    "dct": lambda: BaselineMethod("dct"),
    "lsb": lambda: BaselineMethod("lsb"),
    "dwt": lambda: BaselineMethod("dwt"),
}


def register_method(name: str, factory: Callable[[], Method]) -> None:
    """Make ``factory`` available to :func:`run_eval` under ``name`` (must be picklable for threads > 1)."""
    _REGISTRY[name] = factory


def get_method(name: str) -> Method:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise MethodUnknown(f"method {name!r} is not registered") from None


# --------------------------------------------------------------------------
# config


@dataclass
class EvalConfig:
    corpus: str = "desk"
    methods: list = field(default_factory=lambda: list(DEFAULT_METHODS))
    attacks: list = field(default_factory=lambda: list(A.PRESETS))
    iterations: int = 20
    images: int | None = 50
    threshold: float = 0.95
    master_seed: int = 2024
    image_size: int = 256
    negatives: int | None = None  # per method; default = positive samples per method
    threads: int = 1
    version: str = CONFIG_VERSION

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.methods:
            raise ValueError("methods must be non-empty")
        self.methods = list(self.methods)
        self.attacks = list(self.attacks)

    @classmethod
    def preset(cls, protocol: str, **overrides) -> "EvalConfig":
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}; choose from {sorted(PROTOCOLS)}")
        images, iterations = PROTOCOLS[protocol]
        kw = {"iterations": iterations, "images": images}
        kw.update(overrides)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d

    @classmethod
    def from_json(cls, path) -> "EvalConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc
        protocol = d.pop("protocol", None)
        d.pop("version", None)
        return cls.preset(protocol, **d) if protocol else cls(**d)


def load_corpus(cfg: EvalConfig) -> list[np.ndarray]:
    if cfg.corpus == "desk":
        n = 10 if cfg.images is None else cfg.images
        return desk_corpus(n, size=cfg.image_size, seed=cfg.master_seed)
    root = Path(cfg.corpus)
    if not root.is_dir():
        raise CorpusEmpty(f"corpus directory {root} not found")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"))
    if cfg.images is not None:
        files = files[: cfg.images]
    imgs = [to_gray(read_image(p)) for p in files]
    if not imgs:
        raise CorpusEmpty(f"no images in {root}")
    return imgs


# --------------------------------------------------------------------------
# rows


@dataclass(frozen=True)
class Sample:
    method: str
    image_id: int
    attack: str
    iteration: int
    r: float
    detected: bool
    psnr_after_attack: float | None

    @property
    def key(self):
        return (self.method, self.attack == NEGATIVE, self.image_id, self.attack, self.iteration)


def _detected(r: float, T: float) -> bool:
    return bool(not math.isnan(r) and r > T)


def _positive_task(args):
    method_name, image_id, img, attacks, iterations, master, T = args
    method = get_method(method_name)
    marked, state = method.mark(img)
    rows = []
    for a_idx, attack in enumerate(attacks):
        for it in range(iterations):
            spec = A.sample_preset(attack, A.cell_rng(master, image_id, it, a_idx))
            attacked = A.apply_attack(marked, spec)
            r = float(method.score(attacked, state))
            rows.append(Sample(method_name, image_id, attack, it, r, _detected(r, T), psnr(marked, attacked)))
    return rows, psnr(img, marked)


def _negative_task(args):
    method_name, image_id, img, indices, master, T = args
    method = get_method(method_name)
    _, state = method.mark(img)
    rows = []
    for j in indices:
        # the negative stream depends only on (image, index): every method sees the same controls
        neg = negative_control(img.shape, A.cell_rng(master, image_id, j, 1000))
        r = float(method.score(neg, state))
        rows.append(Sample(method_name, image_id, NEGATIVE, j, r, _detected(r, T), None))
    return rows, None


def _run(tasks, fn, threads):
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# --------------------------------------------------------------------------
# report


@dataclass
class CellSummary:
    method: str
    attack: str
    n: int
    detected: int
    dr: float
    ci: tuple[float, float]
    cv: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci"] = list(self.ci)
        return d


@dataclass
class EvalReport:
    samples: list[Sample] = field(default_factory=list)
    cells: list[CellSummary] = field(default_factory=list)
    fpr: dict = field(default_factory=dict)
    mean_dr: dict = field(default_factory=dict)
    embed_psnr: dict = field(default_factory=dict)
    comparisons: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def cell(self, method: str, attack: str) -> CellSummary:
        for c in self.cells:
            if c.method == method and c.attack == attack:
                return c
        raise KeyError((method, attack))

    def per_image_rates(self, method: str) -> np.ndarray:
        """Detection rate of every (image, attack) pair: the sample unit for the statistics."""
        groups: dict = {}
        for s in self.samples:
            if s.method == method and s.attack != NEGATIVE:
                groups.setdefault((s.image_id, s.attack), []).append(s.detected)
        return np.array([np.mean(groups[k]) for k in sorted(groups)], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "fpr": self.fpr,
            "mean_dr": self.mean_dr,
            "embed_psnr": self.embed_psnr,
            "comparisons": self.comparisons,
        }


def summarize(samples: list[Sample], methods, attacks, embed_psnr=None, config=None) -> EvalReport:
    rep = EvalReport(samples=sorted(samples, key=lambda s: s.key), config=config or {},
                     embed_psnr=embed_psnr or {})
    for m in methods:
        rates = []
        for a in attacks:
            rows = [s for s in rep.samples if s.method == m and s.attack == a]
            if not rows:
                continue
            k = sum(s.detected for s in rows)
            by_image: dict = {}
            for s in rows:
                by_image.setdefault(s.image_id, []).append(s.detected)
            per_image = [np.mean(v) for _, v in sorted(by_image.items())]
            rep.cells.append(CellSummary(m, a, len(rows), k, k / len(rows),
                                         wilson_interval(k, len(rows)),
                                         coefficient_of_variation(per_image)))
            rates.append(k / len(rows))
        if rates:
            rep.mean_dr[m] = float(np.mean(rates))
        neg = [s for s in rep.samples if s.method == m and s.attack == NEGATIVE]
        if neg:
            k = sum(s.detected for s in neg)
            rep.fpr[m] = {"n": len(neg), "false_positives": k, "fpr": k / len(neg),
                          "ci": list(wilson_interval(k, len(neg)))}
    if "ours" in methods:
        ours = rep.per_image_rates("ours")
        for m in methods:
            if m == "ours":
                continue
            other = rep.per_image_rates(m)
            if ours.size >= 2 and other.size >= 2:
                rep.comparisons[f"ours_vs_{m}"] = compare(ours, other).to_dict()
    return rep


def run_eval(cfg: EvalConfig, corpus: list[np.ndarray] | None = None) -> EvalReport:
    for m in cfg.methods:
        get_method(m)
    imgs = load_corpus(cfg) if corpus is None else corpus
    if not imgs:
        raise CorpusEmpty("corpus is empty")
    T = cfg.threshold
    pos_tasks = [(m, i, img, cfg.attacks, cfg.iterations, cfg.master_seed, T)
                 for m in cfg.methods for i, img in enumerate(imgs)]
    n_neg = cfg.negatives if cfg.negatives is not None else len(imgs) * cfg.iterations * len(cfg.attacks)
    neg_tasks = []
    for m in cfg.methods:
        for i, img in enumerate(imgs):
            idx = list(range(i, n_neg, len(imgs)))
            if idx:
                neg_tasks.append((m, i, img, idx, cfg.master_seed, T))
    threads = max(1, int(cfg.threads))
    pos = _run(pos_tasks, _positive_task, threads)
    neg = _run(neg_tasks, _negative_task, threads)
    samples = [s for rows, _ in pos + neg for s in rows]
    embed_psnr: dict = {}
    for (m, *_), (_, p) in zip(pos_tasks, pos):
        embed_psnr.setdefault(m, []).append(p)
    embed_psnr = {m: float(np.mean(v)) for m, v in embed_psnr.items()}
    return summarize(samples, cfg.methods, cfg.attacks, embed_psnr, cfg.to_dict())
