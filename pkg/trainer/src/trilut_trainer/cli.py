"""Training CLI: fit bundles from paired-frame manifests."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dataset import PairedDataset
from .train import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trilut-train",
        description="optimize LUT bundles from SDR/HDR frame pairs")
    parser.add_argument("--manifest", required=True,
                        help="JSONL lines of {\"sdr\": path, \"hdr\": path}")
    parser.add_argument("--out", required=True, help="bundle output path")
    parser.add_argument("--log", default=None, help="JSON training log path")
    parser.add_argument("--epochs", type=int, default=35)
    parser.add_argument("--iterations-per-epoch", type=int, default=None)
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=4)
    parser.add_argument("--patch", type=int, default=600)
    parser.add_argument("--lr", type=float, default=2e-4)
    parser.add_argument("--n", type=int, default=17)
    parser.add_argument("--init", default="table3",
                        choices=["table3", "c100x5", "identity-ones"])
    parser.add_argument("--vertices", default="eq2",
                        choices=["eq2", "uniform"])
    parser.add_argument("--ocio2-cube", default=None)
    parser.add_argument("--davinci-cube", default=None)
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = TrainConfig(epochs=args.epochs,
                      iterations_per_epoch=args.iterations_per_epoch,
                      max_iterations=args.max_iterations,
                      batch_size=args.batch_size, patch=args.patch,
                      lr=args.lr, n=args.n, init_mode=args.init,
                      vertex_mode=args.vertices, ocio2_cube=args.ocio2_cube,
                      davinci_cube=args.davinci_cube, seed=args.seed)
    dataset = PairedDataset(args.manifest)
    result = train(dataset, cfg, log_path=args.log)
    Path(args.out).write_bytes(result.bundle_bytes)
    if result.log:
        last = result.log[-1]
        print(f"epoch {last['epoch']}: l1={last['l1']:.6f} "
              f"smooth={last['smoothness']:.4f} mono={last['monotonicity']:.6f}",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
