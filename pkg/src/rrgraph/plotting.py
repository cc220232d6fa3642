"""Figures for CLI reports: coloured graph drawings and synchronization traces."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import FancyArrowPatch  # noqa: E402

from .graph import MultiGraph  # noqa: E402
from .homomorphism import GraphHom  # noqa: E402


def _layout(G: MultiGraph) -> list[tuple[float, float]]:
    n = G.n
    if n == 1:
        return [(0.0, 0.0)]
    return [(math.cos(2 * math.pi * i / n + math.pi / 2), math.sin(2 * math.pi * i / n + math.pi / 2)) for i in range(n)]


def draw_graph(G: MultiGraph, path: str | Path, hom: GraphHom | None = None, title: str | None = None) -> Path:
    """Draw G on a circle; with ``hom``, edges are coloured by their image."""
    pos = _layout(G)
    fig, ax = plt.subplots(figsize=(5, 5))
    cmap = plt.get_cmap("tab10")
    seen: dict[tuple[int, int], int] = {}
    for k, (s, t) in enumerate(zip(G.src, G.dst)):
        rank = seen.get((s, t), 0)
        seen[(s, t)] = rank + 1
        colour = "0.3"
        label = G.edges[k].id
        if hom is not None:
            img = hom.edge_map[k]
            local = hom.codomain.out_edges[hom.codomain.src[img]].index(img)
            colour = cmap(local % 10)
            label = str(local)
        if s == t:
            x, y = pos[s]
            r = 0.12 + 0.06 * rank
            ax.add_patch(plt.Circle((x * (1 + r), y * (1 + r) + (r if G.n == 1 else 0)), r, fill=False, color=colour))
            continue
        rad = 0.15 + 0.12 * rank
        arrow = FancyArrowPatch(pos[s], pos[t], connectionstyle=f"arc3,rad={rad}",
                                arrowstyle="-|>", mutation_scale=12, color=colour, shrinkA=12, shrinkB=12)
        ax.add_patch(arrow)
        if hom is not None and G.m <= 40:
            (x1, y1), (x2, y2) = pos[s], pos[t]
            # midpoint of the quadratic arc drawn by arc3
            mx = (x1 + x2) / 2 + rad * (y2 - y1) / 2
            my = (y1 + y2) / 2 - rad * (x2 - x1) / 2
            ax.annotate(label, (mx, my), fontsize=7, color=colour, ha="center", va="center")
    for i, (x, y) in enumerate(pos):
        ax.scatter([x], [y], s=300, color="white", edgecolors="black", zorder=3)
        ax.annotate(G.states[i], (x, y), ha="center", va="center", fontsize=8, zorder=4)
    ax.set_xlim(-1.6, 1.6)
    ax.set_ylim(-1.6, 1.6)
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def draw_sync_trace(phi: GraphHom, base_state: str, word: Sequence[str], path: str | Path) -> Path:
    """Size of the fiber image after each prefix of ``word``."""
    G, H = phi.domain, phi.codomain
    cur = set(phi.fibers[H.state_index[base_state]])
    sizes = [len(cur)]
    step = phi.step
    for a in word:
        k = H.edge_index[a]
        cur = {step[x][k] for x in cur}
        sizes.append(len(cur))
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.step(range(len(sizes)), sizes, where="post")
    ax.set_xlabel("word length")
    ax.set_ylabel("image size")
    ax.set_ylim(0, max(sizes) + 0.5)
    ax.set_title(f"fiber over {base_state}, {G.n} states")
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
