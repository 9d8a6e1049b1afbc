"""SDR to HDR/WCG inverse tone mapping through three luma-banded 3D LUTs."""

from .bundle_io import (Bundle, CubeFile, InitLut, VertexMode, load_bundle,
                        make_bundle, make_init_basis, parse_cube, save_bundle,
                        write_cube)
from .contribution import (ContributionMap, ContributionMode,
                           ContributionParams, contribution, fuse)
from .errors import (BundleError, CorruptionError, ParseError, TriLutError,
                     ValidationError)
from .image_io import Frame, FrameFormat, SignalConvention, read_frame, write_frame
from .lutcore import (Branch, ChannelMeans, Lut3D, VertexGrid, gen_vertices,
                      lookup, merge_luts, reg_monotonicity, reg_smoothness,
                      uniform_vertices)
from .pipeline import PipelineConfig, apply, bench, dump_luts
from .predictor import PredictorWeights, downsample, predict_weights

__version__ = "0.1.0"

__all__ = [
    "Branch", "Bundle", "BundleError", "ChannelMeans", "ContributionMap",
    "ContributionMode", "ContributionParams", "CorruptionError", "CubeFile",
    "Frame", "FrameFormat", "InitLut", "Lut3D", "ParseError",
    "PipelineConfig", "PredictorWeights", "SignalConvention", "TriLutError",
    "ValidationError", "VertexGrid", "VertexMode", "apply", "bench",
    "contribution", "downsample", "dump_luts", "fuse", "gen_vertices",
    "load_bundle", "lookup", "make_bundle", "make_init_basis", "merge_luts",
    "parse_cube", "predict_weights", "read_frame", "reg_monotonicity",
    "reg_smoothness", "save_bundle", "uniform_vertices", "write_cube",
    "write_frame",
]
