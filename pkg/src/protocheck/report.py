"""Figure and summary output for the automata pipeline: DOT text, rendered
PNG, and a tab-separated summary next to them."""

from __future__ import annotations

import os

from .automata import PacketAutomaton, RecReport, to_dot


def render_png(a: PacketAutomaton, path: str, title: str = ""):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import networkx as nx

    g = nx.MultiDiGraph()
    g.add_nodes_from(range(a.n_states))
    for e in a.edges:
        g.add_edge(e.src, e.dst, label=e.label)
    pos = nx.spring_layout(g, seed=7)
    fig, ax = plt.subplots(figsize=(6, 4))
    nx.draw_networkx_nodes(g, pos, ax=ax, node_color="#dbe9f4",
                           edgecolors="#3b6ea5", node_size=600)
    nx.draw_networkx_labels(g, pos, ax=ax, font_size=9)
    nx.draw_networkx_edges(g, pos, ax=ax, edge_color="#3b6ea5",
                           connectionstyle="arc3,rad=0.12", arrows=True)
    labels = {(e.src, e.dst): e.label for e in a.edges}
    nx.draw_networkx_edge_labels(g, pos, edge_labels=labels, ax=ax,
                                 font_size=7)
    ax.set_title(title or os.path.basename(path))
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def dump_automata(report: RecReport, outdir: str) -> list[str]:
    """Write every pipeline stage as DOT and PNG plus a summary.tsv; returns
    the paths written."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    stages: list[tuple[str, PacketAutomaton]] = []
    for i, comp in enumerate(report.components):
        stages.append((f"component_{i}", comp))
    if report.prod is not None:
        stages.append(("product", report.prod))
    if report.expanded is not None:
        stages.append(("expanded", report.expanded))
    rows = ["stage\tstates\tedges"]
    for name, a in stages:
        dot_path = os.path.join(outdir, f"{name}.dot")
        with open(dot_path, "w", encoding="utf-8") as fh:
            fh.write(to_dot(a, name) + "\n")
        png_path = os.path.join(outdir, f"{name}.png")
        render_png(a, png_path, title=name)
        written += [dot_path, png_path]
        rows.append(f"{name}\t{a.n_states}\t{len(a.edges)}")
    tsv_path = os.path.join(outdir, "summary.tsv")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    written.append(tsv_path)
    return written
