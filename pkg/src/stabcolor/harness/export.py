"""Graphviz export of the orientation held in a configuration's ``ord`` vectors."""

from __future__ import annotations

from pathlib import Path

from ..monitors import coloring_oracle, dag_oracle


def dot_text(config, *, title: str = "orientation") -> str:
    """DOT digraph: an arc v -> u when v's ``ord`` says u has the greater id.

    Each edge is drawn once, from the endpoint with the smaller node index.
    An edge whose endpoints disagree (both or neither claim the greater
    side) is drawn undirected in red.  When the configuration does not hold
    a correct acyclic orientation a warning comment and label are added.
    """
    topo = config.topology
    nodes = config.nodes
    ok = dag_oracle(config)
    lines = [f'digraph "{title}" {{']
    if not ok:
        lines.append("  // WARNING: orientation not converged; arcs show current ord bits")
        lines.append('  label="WARNING: not converged";')
    for v in range(topo.n):
        lines.append(f'  {v} [label="{v}\\nid={topo.ids[v]}\\nc={nodes[v].color.c}"];')
    for v, u in topo.edges:
        up_from_v = nodes[v].dag.ord[topo.port(v, u)] == 1
        up_from_u = nodes[u].dag.ord[topo.port(u, v)] == 1
        if up_from_v and not up_from_u:
            lines.append(f"  {v} -> {u};")
        elif up_from_u and not up_from_v:
            lines.append(f"  {u} -> {v};")
        else:
            lines.append(f"  {v} -> {u} [dir=none, color=red];")
    lines.append(f"  // dag_oracle={ok} coloring_oracle={coloring_oracle(config)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(config, path, *, title: str = "orientation") -> bool:
    """Write :func:`dot_text` to ``path``; returns whether the orientation was correct."""
    Path(path).write_text(dot_text(config, title=title))
    return dag_oracle(config)
