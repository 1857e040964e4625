"""Tessellation text format and SVG export.

The text format is line oriented, whitespace separated, with every float
printed to 17 significant digits (lossless double round trip):

    TESS 1
    dim <l>  t <t>  seed <seed>  cells <count>  events <count>
    window <nverts> <x1> <y1> ... (window vertex list; 3D vertices sorted
                                   lexicographically)
    cell <id> <parent|-> <birth_time> <nverts> <coords...>
    event <time> <cell_id> <normal coords...> <offset> <censored 0|1>

Cell rows list the surviving cells in ascending id; event rows keep event
order.  Facet geometry is not serialized (it is reconstructible by replaying
the events against the genealogy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .process import Tessellation

FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _window_vertex_list(tess: Tessellation) -> np.ndarray:
    verts = tess.window.vertices
    if tess.dim == 3:
        order = np.lexsort(tuple(verts[:, r] for r in reversed(range(3))))
        verts = verts[order]
    return verts


def dump_tessellation(tess: Tessellation) -> str:
    lines = [f"TESS {FORMAT_VERSION}"]
    lines.append(
        f"dim {tess.dim} t {_fmt(tess.time)} seed {tess.seed if tess.seed is not None else '-'} "
        f"cells {len(tess.cells)} events {len(tess.events)}"
    )
    wv = _window_vertex_list(tess)
    lines.append("window " + str(wv.shape[0]) + " " + " ".join(_fmt(x) for x in wv.ravel()))
    for cell in tess.cells:
        verts = cell.polytope.vertices
        if tess.dim == 3:
            order = np.lexsort(tuple(verts[:, r] for r in reversed(range(3))))
            verts = verts[order]
        parent = "-" if cell.parent_id is None else str(cell.parent_id)
        lines.append(
            f"cell {cell.id} {parent} {_fmt(cell.birth_time)} {verts.shape[0]} "
            + " ".join(_fmt(x) for x in verts.ravel())
        )
    for ev in tess.events:
        lines.append(
            f"event {_fmt(ev.time)} {ev.cell_id} "
            + " ".join(_fmt(x) for x in ev.hyperplane.normal)
            + f" {_fmt(ev.hyperplane.offset)} {1 if ev.censored else 0}"
        )
    return "\n".join(lines) + "\n"


def write_tessellation(tess: Tessellation, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dump_tessellation(tess))


@dataclass(frozen=True)
class TessellationRecord:
    """Parsed text-format content (geometric summary, not a live state)."""

    dim: int
    t: float
    seed: int | None
    window_vertices: np.ndarray
    cells: tuple  # (id, parent or None, birth_time, vertices)
    events: tuple  # (time, cell_id, normal, offset, censored)


def load_tessellation(path) -> TessellationRecord:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("TESS"):
        raise ValueError("not a tessellation file")
    version = int(lines[0].split()[1])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported tessellation format version {version}")
    header = lines[1].split()
    fields = dict(zip(header[::2], header[1::2]))
    dim = int(fields["dim"])
    t = float(fields["t"])
    seed = None if fields["seed"] == "-" else int(fields["seed"])
    n_cells = int(fields["cells"])
    n_events = int(fields["events"])
    wtok = lines[2].split()
    assert wtok[0] == "window"
    nv = int(wtok[1])
    window_vertices = np.array([float(x) for x in wtok[2 : 2 + nv * dim]]).reshape(nv, dim)
    cells = []
    events = []
    for ln in lines[3:]:
        tok = ln.split()
        if tok[0] == "cell":
            cid = int(tok[1])
            parent = None if tok[2] == "-" else int(tok[2])
            birth = float(tok[3])
            nv = int(tok[4])
            verts = np.array([float(x) for x in tok[5 : 5 + nv * dim]]).reshape(nv, dim)
            cells.append((cid, parent, birth, verts))
        elif tok[0] == "event":
            time = float(tok[1])
            cid = int(tok[2])
            normal = np.array([float(x) for x in tok[3 : 3 + dim]])
            offset = float(tok[3 + dim])
            censored = tok[4 + dim] == "1"
            events.append((time, cid, normal, offset, censored))
        else:
            raise ValueError(f"unknown row type {tok[0]!r}")
    if len(cells) != n_cells or len(events) != n_events:
        raise ValueError("row counts disagree with the header")
    return TessellationRecord(
        dim=dim,
        t=t,
        seed=seed,
        window_vertices=window_vertices,
        cells=tuple(cells),
        events=tuple(events),
    )


def render_svg(tess: Tessellation, stroke_width: float = 0.004) -> str:
    """SVG drawing of a planar tessellation: the window frame plus every
    dividing chord, one user unit per length unit, 17-digit coordinates."""
    if tess.dim != 2:
        raise ValueError("SVG export is a 2D feature")
    ring = tess.window.vertices
    xmin, ymin = ring.min(axis=0)
    xmax, ymax = ring.max(axis=0)
    pad = 0.01 * max(xmax - xmin, ymax - ymin)
    sw = stroke_width * max(xmax - xmin, ymax - ymin)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(xmin - pad)} {_fmt(ymin - pad)} '
        f'{_fmt(xmax - xmin + 2 * pad)} {_fmt(ymax - ymin + 2 * pad)}">',
        f'<g fill="none" stroke="black" stroke-width="{_fmt(sw)}" stroke-linecap="round">',
    ]
    frame = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in ring)
    out.append(f'<polygon points="{frame}"/>')
    for ev in tess.events:
        (x1, y1), (x2, y2) = ev.facet.vertices
        out.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(tess: Tessellation, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(render_svg(tess))
