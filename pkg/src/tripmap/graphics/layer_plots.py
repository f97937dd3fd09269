"""
Interactive heat-maps of map layers.
https://plotly.com/python/reference/heatmap/
"""

#
# _|_|_|_|_|  _|_|_|    _|_|_|  _|_|_|
#     _|      _|    _|    _|    _|    _|
#     _|      _|_|_|      _|    _|_|_|
#     _|      _|    _|    _|    _|
#     _|      _|    _|  _|_|_|  _|
#
#

from __future__ import annotations
from typing import Optional
import sys
import numpy as np
import plotly.graph_objects as go  # type: ignore
from ..fusion import MapSnapshot
from . import graphics_common


def layer_figure(
    snap: MapSnapshot, layer: str, title: Optional[str] = None
) -> go.Figure:
    """
    Heat-map figure of one layer in world coordinates. Empty cells are
    left blank.

    """
    values = snap.layer(layer)
    n_y, n_x = snap.spec.shape
    res = snap.spec.resolution
    xs = snap.spec.origin[0] + (np.arange(n_x) + 0.5) * res
    ys = snap.spec.origin[1] + (np.arange(n_y) + 0.5) * res
    if layer in graphics_common.RISK_LAYERS:
        n_c = len(graphics_common.RISK_COLORS)
        colorscale = [
            [k / (n_c - 1), color]
            for k, color in enumerate(graphics_common.RISK_COLORS)
        ]
        if layer == "n_z":
            colorscale = [
                [1.00 - pos, color] for pos, color in colorscale[::-1]
            ]
        zrange = {"zmin": 0.00, "zmax": 1.00}
    else:
        colorscale = "Greys_r"
        zrange = {}
    trace = go.Heatmap(
        x=xs,
        y=ys,
        z=np.where(np.isfinite(values), values, None),
        colorscale=colorscale,
        colorbar={"title": layer},
        hovertemplate="x: %{x:.2f} m<br>y: %{y:.2f} m<br>"
        + layer
        + ": %{z:.3f}<extra></extra>",
        **zrange,
    )
    fig = go.Figure(data=[trace])
    fig.update_layout(
        title=title if title is not None else layer,
        plot_bgcolor=graphics_common.C_BACKGROUND,
        xaxis={"title": "x (m)", "gridcolor": graphics_common.C_GRID},
        yaxis={
            "title": "y (m)",
            "gridcolor": graphics_common.C_GRID,
            "scaleanchor": "x",
            "scaleratio": 1,
        },
    )
    return fig


def show_layer(
    snap: MapSnapshot,
    layer: str,
    to_html_file: Optional[str] = None,
    title: Optional[str] = None,
) -> go.Figure:
    """
    Shows a layer heat-map, or writes it to an HTML file.

    """
    fig = layer_figure(snap, layer, title)
    # show the plot (if it's not a test)
    if "pytest" not in sys.modules:
        if to_html_file:
            fig.write_html(to_html_file)
        else:
            fig.show()
    return fig
