import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).parent))

from trilut_trainer.formats import write_raw_frame, read_raw_frame
from trilut_trainer.model import BRANCH_NAMES, TriLutNet


def engine(*args: str) -> subprocess.CompletedProcess:
    """Run the engine CLI (the only interface to the primary component)."""
    return subprocess.run(["trilut", *args], capture_output=True, text=True)


def engine_apply(bundle_bytes: bytes, planes: np.ndarray, tmp_path: Path,
                 tag: str = "x", threads: int = 1) -> np.ndarray:
    """Round one SDR frame through `trilut apply` using raw float frames."""
    bundle_path = tmp_path / f"{tag}.itmlut"
    bundle_path.write_bytes(bundle_bytes)
    in_path = tmp_path / f"{tag}_in.itmf"
    out_path = tmp_path / f"{tag}_out.itmf"
    in_path.write_bytes(write_raw_frame(planes))
    proc = engine("apply", "--bundle", str(bundle_path), "--in", str(in_path),
                  "--out", str(out_path), "--threads", str(threads))
    assert proc.returncode == 0, proc.stderr
    return read_raw_frame(out_path.read_bytes())


def engine_checksums(bundle_bytes: bytes, tmp_path: Path,
                     tag: str = "c") -> dict[str, str]:
    bundle_path = tmp_path / f"{tag}.itmlut"
    bundle_path.write_bytes(bundle_bytes)
    proc = engine("inspect", "--bundle", str(bundle_path), "--checksums")
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)["checksums"]


def randomized_model(rng: np.random.Generator, n: int = 9,
                     vertex_mode: str = "eq2", seed: int = 0) -> TriLutNet:
    """Model with fully random basis content (predictors keep their
    Xavier/Kaiming init, which is already random)."""
    model = TriLutNet(n=n, init_mode="table3", vertex_mode=vertex_mode,
                      seed=seed)
    with torch.no_grad():
        for branch in BRANCH_NAMES:
            model.basis[branch].copy_(torch.from_numpy(
                rng.uniform(-0.1, 1.1, size=(5, n, n, n, 3))
                .astype(np.float32)))
    return model
