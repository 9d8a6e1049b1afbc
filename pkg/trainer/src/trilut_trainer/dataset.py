"""Paired SDR/HDR dataset with the random resize + crop augmentation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .formats import read_frame_file


@dataclass
class Pair:
    sdr: np.ndarray  # (3, h, w) float32 in [0,1]
    hdr: np.ndarray


class PairedDataset:
    """JSONL manifest of {"sdr": path, "hdr": path} lines, shape-matched."""

    def __init__(self, manifest_path: str):
        base = Path(manifest_path).parent
        self.pairs: list[Pair] = []
        with open(manifest_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                sdr = read_frame_file(str(base / entry["sdr"]))
                hdr = read_frame_file(str(base / entry["hdr"]))
                if sdr.shape != hdr.shape:
                    raise ValueError(f"pair shape mismatch: {entry}")
                self.pairs.append(Pair(sdr=np.clip(sdr, 0.0, 1.0),
                                       hdr=np.clip(hdr, 0.0, 1.0)))
        if not self.pairs:
            raise ValueError(f"{manifest_path}: empty manifest")

    def __len__(self) -> int:
        return len(self.pairs)

    def sample_patch(self, rng: np.random.Generator, patch: int,
                     resize_min: float, resize_max: float
                     ) -> tuple[torch.Tensor, torch.Tensor]:
        """One random-resized random crop from a random pair.

        Scales whose resized frame cannot fit the patch are re-drawn; if no
        admissible scale exists the pair is too small for the config.
        """
        pair = self.pairs[int(rng.integers(0, len(self.pairs)))]
        h, w = pair.sdr.shape[1:]
        if min(h, w) * resize_max < patch:
            raise ValueError(f"frames {w}x{h} cannot cover a {patch} patch "
                             f"even at scale {resize_max}")
        for _ in range(64):
            scale = float(rng.uniform(resize_min, resize_max))
            nh, nw = round(h * scale), round(w * scale)
            if nh >= patch and nw >= patch:
                break
        else:
            nh, nw = max(patch, h), max(patch, w)
        sdr = torch.from_numpy(pair.sdr).unsqueeze(0)
        hdr = torch.from_numpy(pair.hdr).unsqueeze(0)
        if (nh, nw) != (h, w):
            sdr = F.interpolate(sdr, size=(nh, nw), mode="bilinear",
                                align_corners=False)
            hdr = F.interpolate(hdr, size=(nh, nw), mode="bilinear",
                                align_corners=False)
        y0 = int(rng.integers(0, nh - patch + 1))
        x0 = int(rng.integers(0, nw - patch + 1))
        return (sdr[0, :, y0:y0 + patch, x0:x0 + patch].clamp(0.0, 1.0),
                hdr[0, :, y0:y0 + patch, x0:x0 + patch].clamp(0.0, 1.0))

    def batch(self, rng: np.random.Generator, batch_size: int, patch: int,
              resize_min: float, resize_max: float
              ) -> tuple[torch.Tensor, torch.Tensor]:
        xs, ys = [], []
        for _ in range(batch_size):
            x, y = self.sample_patch(rng, patch, resize_min, resize_max)
            xs.append(x)
            ys.append(y)
        return torch.stack(xs), torch.stack(ys)
