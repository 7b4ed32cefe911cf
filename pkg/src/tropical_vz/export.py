"""DOT and TikZ drawings of a cover, optionally with the levels of λ."""

from __future__ import annotations

import re
from collections.abc import Sequence
from fractions import Fraction

import graphviz
from beartype import beartype

from tropical_vz.canonical_pl import LambdaRegionData
from tropical_vz.hyperelliptic_cover import TropCover
from tropical_vz.linform import format_rational
from tropical_vz.trop_graph import TropCurve


def _vertex_label(curve: TropCurve, vertex_id: str, level: Fraction | None) -> str:
    v = curve.vertex(vertex_id)
    parts = [vertex_id]
    if v.genus:
        parts.append(f"g={v.genus}")
    if v.weight:
        parts.append(f"w={v.weight}")
    if level is not None:
        parts.append(f"λ={format_rational(level)}")
    return "\\n".join(parts)


def _levels(region_data: LambdaRegionData | None) -> dict[str, Fraction]:
    if region_data is None:
        return {}
    values = region_data.subdivided().values
    return {v: form.evaluate(region_data.sample) for v, form in values.items()}


@beartype
def to_dot(cover: TropCover, region_data: LambdaRegionData | None = None) -> str:
    names = list(cover.coordinates)
    levels = _levels(region_data)
    curve = region_data.subdivided().curve if region_data is not None else cover.source
    dot = graphviz.Graph(comment=f"cover {cover.name}")
    dot.attr(rankdir="TB")
    with dot.subgraph(name="cluster_source") as source:
        source.attr(label="source")
        for v in curve.vertices:
            source.node(f"s_{v.id}", _vertex_label(curve, v.id, levels.get(v.id)))
        for e in curve.edges:
            source.edge(f"s_{e.tail}", f"s_{e.head}", label=f"{e.id}: {e.length.render(names)}")
        for leg in curve.legs:
            source.node(f"s_leg_{leg.id}", leg.label or leg.id, shape="plaintext")
            source.edge(f"s_{leg.base}", f"s_leg_{leg.id}", style="dashed")
    with dot.subgraph(name="cluster_target") as target:
        target.attr(label="target")
        for v in cover.target.vertices:
            branch = cover.branch_legs_at(v.id)
            label = v.id if not branch else f"{v.id}\\nb={branch}"
            target.node(f"t_{v.id}", label, shape="box")
        for e in cover.target.edges:
            target.edge(f"t_{e.tail}", f"t_{e.head}", label=f"{e.id}: {e.length.render(names)}")
    return dot.source


def _tikz_name(identifier: str) -> str:
    return re.sub(r"[^A-Za-z0-9]", "-", identifier)


def _tikz_rows(vertex_ids: Sequence[str], levels: dict[str, Fraction], y0: int) -> dict[str, tuple[int, Fraction]]:
    if levels:
        return {v: (i, levels.get(v, Fraction(0)) + y0) for i, v in enumerate(vertex_ids)}
    return {v: (i, Fraction(y0)) for i, v in enumerate(vertex_ids)}


@beartype
def to_tikz(cover: TropCover, region_data: LambdaRegionData | None = None) -> str:
    names = list(cover.coordinates)
    levels = _levels(region_data)
    curve = region_data.subdivided().curve if region_data is not None else cover.source
    top = max(levels.values(), default=Fraction(0))
    source_at = _tikz_rows([v.id for v in curve.vertices], levels, 0)
    target_at = _tikz_rows([v.id for v in cover.target.vertices], {}, -2)
    lines = ["\\begin{tikzpicture}[every node/.style={circle, draw, inner sep=1pt}]"]
    if levels:
        lines.append(f"% λ levels from 0 to {format_rational(top)}")
    for prefix, at, graph in (("s", source_at, curve), ("t", target_at, cover.target)):
        for v in graph.vertices:
            x, y = at[v.id]
            label = _vertex_label(graph, v.id, levels.get(v.id) if prefix == "s" else None)
            label = label.replace("\\n", ", ")
            lines.append(
                f"  \\node ({prefix}-{_tikz_name(v.id)}) at ({2 * x},{float(y):g}) {{{label}}};"
            )
        for e in graph.edges:
            a, b = f"{prefix}-{_tikz_name(e.tail)}", f"{prefix}-{_tikz_name(e.head)}"
            path = f"({a}) to[loop above] ()" if e.is_loop else f"({a}) -- ({b})"
            lines.append(
                f"  \\draw {path} node[midway, draw=none, fill=white] {{${e.length.render(names)}$}};"
            )
    lines.append("\\end{tikzpicture}")
    return "\n".join(lines) + "\n"
