"""Model state to engine-loadable bundle bytes."""

from __future__ import annotations

import numpy as np

from .formats import BundleState, write_bundle
from .model import BRANCH_NAMES, TriLutNet


def export_bundle(model: TriLutNet) -> bytes:
    state = BundleState(
        n=model.n,
        vertex_mode=model.vertex_mode,
        contribution=dict(model.contribution),
        provenance=["trained by trilut-trainer"] + list(model.init_notes),
    )
    for branch in BRANCH_NAMES:
        state.basis[branch] = model.basis[branch].detach().cpu().numpy()
        net = model.nets[branch]
        params: dict[str, np.ndarray] = {}
        for i, conv in enumerate(net.convs, start=1):
            params[f"conv{i}.weight"] = conv.weight.detach().cpu().numpy()
            params[f"conv{i}.bias"] = conv.bias.detach().cpu().numpy()
        params["fc.weight"] = net.fc.weight.detach().cpu().numpy()
        params["fc.bias"] = net.fc.bias.detach().cpu().numpy()
        state.predictor[branch] = params
    return write_bundle(state)
