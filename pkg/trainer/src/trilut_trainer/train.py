"""Training loop: AdaM with cosine-decayed learning rate, L1 + LUT penalty."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .dataset import PairedDataset
from .export import export_bundle
from .model import TriLutNet, reg_monotonicity, reg_smoothness


@dataclass
class TrainConfig:
    batch_size: int = 4
    patch: int = 600
    resize_min: float = 0.25
    resize_max: float = 1.25
    lr: float = 2e-4
    basis_lr: float | None = None  # None: basis lattices share lr
    lr_min: float = 1e-6
    epochs: int = 35
    iterations_per_epoch: int | None = None  # default: pairs/batch, min 1
    max_iterations: int | None = None        # hard cap, for smoke tests
    smooth_weight: float = 0.01
    mono_weight: float = 10.0
    n: int = 17
    init_mode: str = "table3"
    vertex_mode: str = "eq2"
    contribution: dict = field(default_factory=lambda: {
        "mode": "eq3", "tb": 0.55, "td": 0.45, "mu": 5000.0})
    ocio2_cube: str | None = None
    davinci_cube: str | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("batch_size", "patch", "lr", "lr_min",
                     "resize_min", "resize_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class TrainResult:
    bundle_bytes: bytes
    log: list[dict]
    model: TriLutNet


def train(dataset: PairedDataset, cfg: TrainConfig,
          log_path: str | None = None) -> TrainResult:
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = TriLutNet(n=cfg.n, init_mode=cfg.init_mode,
                      vertex_mode=cfg.vertex_mode,
                      contribution=dict(cfg.contribution),
                      ocio2_cube=cfg.ocio2_cube, davinci_cube=cfg.davinci_cube,
                      seed=cfg.seed)
    groups = [{"params": list(model.nets.parameters()), "lr": cfg.lr},
              {"params": list(model.basis.parameters()),
               "lr": cfg.basis_lr if cfg.basis_lr is not None else cfg.lr}]
    optimizer = torch.optim.Adam(groups)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=max(cfg.epochs, 1), eta_min=cfg.lr_min)

    per_epoch = cfg.iterations_per_epoch or max(len(dataset) // cfg.batch_size, 1)
    log: list[dict] = []
    iteration = 0
    done = False
    for epoch in range(cfg.epochs):
        epoch_terms = {"l1": 0.0, "smooth": 0.0, "mono": 0.0}
        steps = 0
        for _ in range(per_epoch):
            if cfg.max_iterations is not None and iteration >= cfg.max_iterations:
                done = True
                break
            x, y_ref = dataset.batch(rng, cfg.batch_size, cfg.patch,
                                     cfg.resize_min, cfg.resize_max)
            y, merged = model(x)
            # data term is the L1 norm proper (sum); the fixed 0.01/10
            # penalty weights are calibrated against that scale
            l1 = (y - y_ref).abs().sum()
            batch = x.shape[0]
            # penalty applies to the merged per-sample lattices; gradients
            # reach the basis tensors through the merge weights
            smooth = sum(reg_smoothness(merged[b]) for b in merged) / batch
            mono = sum(reg_monotonicity(merged[b]) for b in merged) / batch
            loss = l1 + cfg.smooth_weight * smooth + cfg.mono_weight * mono
            if not torch.isfinite(loss):
                snapshot = {"epoch": epoch, "iteration": iteration,
                            "l1": float(l1.detach()),
                            "smooth": float(smooth.detach()),
                            "mono": float(mono.detach())}
                raise RuntimeError(f"non-finite loss, aborting: {snapshot}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_terms["l1"] += float(l1.detach())
            epoch_terms["smooth"] += float(smooth.detach())
            epoch_terms["mono"] += float(mono.detach())
            steps += 1
            iteration += 1
        if steps:
            log.append({"epoch": epoch,
                        "lr": float(optimizer.param_groups[0]["lr"]),
                        "l1": epoch_terms["l1"] / steps,
                        "smoothness": epoch_terms["smooth"] / steps,
                        "monotonicity": epoch_terms["mono"] / steps,
                        "iterations": iteration})
        scheduler.step()
        if done:
            break
    bundle = export_bundle(model)
    if log_path:
        Path(log_path).write_text(json.dumps(
            {"config": asdict(cfg), "epochs": log}, indent=2) + "\n")
    return TrainResult(bundle_bytes=bundle, log=log, model=model)
