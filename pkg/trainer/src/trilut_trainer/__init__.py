"""Training harness producing bundles for the trilut engine."""

from .dataset import PairedDataset
from .export import export_bundle
from .formats import BundleState, read_bundle, write_bundle
from .model import TriLutNet
from .train import TrainConfig, TrainResult, train

__all__ = ["BundleState", "PairedDataset", "TrainConfig", "TrainResult",
           "TriLutNet", "export_bundle", "read_bundle", "train",
           "write_bundle"]
