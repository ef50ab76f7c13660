# Copyright 2026 spinspectra Contributors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#      http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import warnings
from pathlib import Path
from typing import Optional, Union

import matplotlib
import networkx as nx
import numpy as np

from spinspectra.analysis import Spectrum
from spinspectra.spin_system import SpinSystem


def draw_coupling_graph(system: SpinSystem) -> None:
    """Draw the coupling graph using matplotlib

    Protons are filled grey and other isotopes white. The line thickness of each edge
    grows with |J| (between 0.2 pts and 2.2 pts), and each edge is labelled with J in Hz.
    Note that you may need to call `plt.figure()` before and `plt.show()` after calling
    this function.
    """
    # Ignore matplotlib deprecation warnings from networkx.draw_networkx
    warnings.filterwarnings("ignore", category=matplotlib.MatplotlibDeprecationWarning)
    warnings.filterwarnings("ignore", category=DeprecationWarning)
    G = system.to_networkx()
    pos = nx.spectral_layout(G, weight=None) if G.number_of_nodes() > 2 else nx.circular_layout(G)
    c = "#bfbfbf"
    ncolors = [c if n[1]['isotope'] == "1H" else 'w' for n in G.nodes(data=True)]
    nx.draw_networkx_nodes(G, pos=pos, node_color=ncolors, edgecolors=c)
    nx.draw_networkx_labels(G, pos=pos, labels={i: d['label'] for i, d in G.nodes(data=True)})
    if G.number_of_edges() == 0:
        return
    weights = np.abs(np.array([e[2]['j_hz'] for e in G.edges(data=True)]))
    normalised_weights = 0.2 + 2 * weights / np.max(weights)
    nx.draw_networkx_edges(G, pos=pos, width=normalised_weights)
    edge_labels = {(s, t): f"{d['j_hz']:g}" for (s, t, d) in G.edges(data=True)}
    nx.draw_networkx_edge_labels(G, pos=pos, edge_labels=edge_labels)


def plot_spectrum(spectrum: Spectrum, path: Optional[Union[str, Path]] = None, title: Optional[str] = None):
    """Plot amplitude against chemical shift with the conventional inverted ppm axis

    Parameters
    ----------
    spectrum : Spectrum
    path : str or Path, optional
        If given, the figure is saved there as SVG and closed.
    title : str, optional

    Returns
    -------
    matplotlib.figure.Figure
    """
    from matplotlib.figure import Figure

    fig = Figure(figsize=(5, 3))
    ax = fig.add_subplot()
    ax.plot(spectrum.points, spectrum.amplitudes, linewidth=0.8)
    if spectrum.axis == "ppm":
        ax.invert_xaxis()
        ax.set_xlabel("ppm", size=8)
    else:
        ax.set_xlabel("rad/s", size=8)
    ax.tick_params(labelsize=8)
    if title:
        ax.set_title(title, size=9)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, format="svg")
    return fig
