import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from trilut.bundle_io import Bundle, VertexMode
from trilut.contribution import ContributionMode, ContributionParams
from trilut.lutcore import BRANCHES, Lut3D, VertexGrid
from trilut.predictor import PredictorWeights


def random_axis(rng: np.random.Generator, n: int) -> np.ndarray:
    gaps = rng.random(n - 1) + 0.05
    axis = np.concatenate([[0.0], np.cumsum(gaps)])
    return axis / axis[-1]


def random_lut(rng: np.random.Generator, n: int, lo=-0.5, hi=1.5) -> Lut3D:
    grid = VertexGrid(random_axis(rng, n), random_axis(rng, n),
                      random_axis(rng, n))
    content = rng.uniform(lo, hi, size=(n, n, n, 3))
    return Lut3D(content=content, grid=grid)


def random_bundle(rng: np.random.Generator, n: int = 9,
                  vertex_mode: VertexMode | None = None,
                  mode: ContributionMode | None = None) -> Bundle:
    """Random basis contents and contribution setup with a bias-only
    predictor, so the merge weights are exactly the FC bias vectors."""
    if vertex_mode is None:
        vertex_mode = rng.choice([VertexMode.ADAPTIVE, VertexMode.UNIFORM])
    if mode is None:
        mode = rng.choice(list(ContributionMode))
    if mode in (ContributionMode.LINEAR, ContributionMode.HARD):
        td = float(rng.uniform(0.1, 0.45))
        tb = float(rng.uniform(td + 0.1, 0.9))
    else:
        tb, td = 0.55, 0.45
    params = ContributionParams(mode=mode, tb=tb, td=td,
                                mu=float(rng.uniform(100.0, 9000.0)))
    basis = {branch: rng.uniform(-0.25, 1.25, size=(5, n, n, n, 3))
             for branch in BRANCHES}
    predictor = {branch: PredictorWeights.zeros(rng.uniform(-1.0, 1.5, size=5))
                 for branch in BRANCHES}
    return Bundle(n=n, vertex_mode=vertex_mode, contribution=params,
                  basis=basis, predictor=predictor)
