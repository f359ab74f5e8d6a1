"""File formats: CSV tables, OBJ geometry, and versioned binary dumps.

Every file carries a format version and the JSON run configuration that
produced it. Binary layouts are little-endian:

surface (``.surf``)
    ``b"DVSF"``, u32 version, u32 d, f64 h, u32 config length, config JSON,
    then u64 counts and int64 arrays for inside voxels, surfels, surfel
    normals (int8) and clipped flags (uint8).
graph (``.graph``)
    ``b"DVGR"``, u32 version, u32 d, u32 r, u64 #points, u64 #directions,
    u32 config length, config JSON, int64 points, int64 directions, then the
    visibility table bit-packed row by row (one row per direction).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .engine import PointIndex, VisibilityGraph
from .shapes import DigitalSurface, extract_boundary

FORMAT_VERSION = 1
SURF_MAGIC = b"DVSF"
GRAPH_MAGIC = b"DVGR"


class FormatError(ValueError):
    """Raised on malformed or unsupported input files."""


def _header_lines(kind: str, config: dict | None) -> list[str]:
    return [f"# digivis format={FORMAT_VERSION} kind={kind}", f"# config={json.dumps(config or {}, sort_keys=True)}"]


def write_csv(path, kind: str, columns: list[str], rows, config: dict | None = None) -> None:
    with open(path, "w") as fh:
        for line in _header_lines(kind, config):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(meta, columns, rows)``; ``meta`` holds the header fields."""
    meta: dict = {}
    columns: list[str] = []
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# config="):
                meta["config"] = json.loads(line[len("# config="):])
            elif line.startswith("# digivis"):
                for tok in line[2:].split()[1:]:
                    k, _, v = tok.partition("=")
                    meta[k] = v
            elif line.startswith("#") or not line.strip():
                continue
            elif not columns:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return meta, columns, rows


def read_points(path) -> np.ndarray:
    """Integer points, one per line, separated by spaces or commas; ``#`` comments."""
    pts = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                pts.append([int(tok) for tok in line.replace(",", " ").split()])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: not an integer point: {line!r}") from exc
    if not pts:
        raise FormatError(f"{path}: no points")
    if len({len(p) for p in pts}) != 1:
        raise FormatError(f"{path}: points of mixed dimension")
    return np.array(pts, dtype=np.int64)


def write_points(path, points, config: dict | None = None) -> None:
    with open(path, "w") as fh:
        for line in _header_lines("points", config):
            fh.write(line + "\n")
        for p in np.asarray(points).tolist():
            fh.write(" ".join(map(str, p)) + "\n")


# -- binary -------------------------------------------------------------------


def _pack_config(config: dict | None) -> bytes:
    blob = json.dumps(config or {}, sort_keys=True).encode()
    return struct.pack("<I", len(blob)) + blob


def _take(buf: memoryview, pos: int, n: int) -> tuple[memoryview, int]:
    if pos + n > len(buf):
        raise FormatError("truncated file")
    return buf[pos:pos + n], pos + n


def _read_config(buf, pos):
    raw, pos = _take(buf, pos, 4)
    (n,) = struct.unpack("<I", raw)
    raw, pos = _take(buf, pos, n)
    try:
        return json.loads(bytes(raw)), pos
    except ValueError as exc:
        raise FormatError("corrupt config block") from exc


def _read_array(buf, pos, dtype, count, d):
    dt = np.dtype(dtype).newbyteorder("<")
    raw, pos = _take(buf, pos, dt.itemsize * count * max(d, 1))
    arr = np.frombuffer(raw, dtype=dt).reshape(count, d) if d else np.frombuffer(raw, dtype=dt)
    return arr.astype(dt.newbyteorder("="), copy=True), pos


def save_surface(path, surf: DigitalSurface, config: dict | None = None) -> None:
    d = surf.dim
    with open(path, "wb") as fh:
        fh.write(SURF_MAGIC + struct.pack("<IId", FORMAT_VERSION, d, surf.gridstep))
        fh.write(_pack_config(config))
        fh.write(struct.pack("<QQ", len(surf.inside), len(surf.surfels)))
        fh.write(surf.inside.astype("<i8").tobytes())
        fh.write(surf.surfels.astype("<i8").tobytes())
        fh.write(surf.surfel_normals.astype("<i1").tobytes())
        fh.write(surf.clipped.astype("<u1").tobytes())


def load_surface(path) -> tuple[DigitalSurface, dict]:
    buf = memoryview(Path(path).read_bytes())
    if bytes(buf[:4]) != SURF_MAGIC:
        raise FormatError(f"{path}: not a surface file")
    raw, pos = _take(buf, 4, 16)
    version, d, h = struct.unpack("<IId", raw)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if d < 1 or not h > 0:
        raise FormatError(f"{path}: bad header")
    config, pos = _read_config(buf, pos)
    raw, pos = _take(buf, pos, 16)
    nv, ns = struct.unpack("<QQ", raw)
    inside, pos = _read_array(buf, pos, "i8", nv, d)
    surfels, pos = _read_array(buf, pos, "i8", ns, d)
    normals, pos = _read_array(buf, pos, "i1", ns, d)
    clipped, pos = _read_array(buf, pos, "u1", ns, 0)
    if pos != len(buf):
        raise FormatError(f"{path}: trailing bytes")
    surf = extract_boundary(inside.reshape(-1, d), h)
    if len(surf.surfels) != ns or not np.array_equal(surf.surfels, surfels):
        raise FormatError(f"{path}: stored surfels do not match the voxel set")
    surf.surfel_normals = normals.astype(np.int64)
    surf.clipped = clipped.astype(bool)
    return surf, config


def save_graph(path, G: VisibilityGraph, config: dict | None = None) -> None:
    N, D = len(G.points), len(G.directions)
    with open(path, "wb") as fh:
        fh.write(GRAPH_MAGIC + struct.pack("<IIIQQ", FORMAT_VERSION, G.dim, G.radius, N, D))
        fh.write(_pack_config(config))
        fh.write(G.points.astype("<i8").tobytes())
        fh.write(G.directions.astype("<i8").tobytes())
        fh.write(np.packbits(G.primitive, axis=1, bitorder="little").tobytes())


def load_graph(path) -> tuple[VisibilityGraph, dict]:
    buf = memoryview(Path(path).read_bytes())
    if bytes(buf[:4]) != GRAPH_MAGIC:
        raise FormatError(f"{path}: not a graph file")
    raw, pos = _take(buf, 4, 28)
    version, d, r, N, D = struct.unpack("<IIIQQ", raw)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    config, pos = _read_config(buf, pos)
    points, pos = _read_array(buf, pos, "i8", N, d)
    dirs, pos = _read_array(buf, pos, "i8", D, d)
    row = (N + 7) // 8
    bits, pos = _read_array(buf, pos, "u1", D, row)
    if pos != len(buf):
        raise FormatError(f"{path}: trailing bytes")
    table = np.unpackbits(bits, axis=1, count=N, bitorder="little").astype(bool) if D else np.zeros((0, N), bool)
    return VisibilityGraph(points, dirs, table, int(r)), config


# -- OBJ ----------------------------------------------------------------------


def _quad(code, normal) -> list[np.ndarray]:
    odd = np.flatnonzero(code & 1)
    j, k = odd
    corners = []
    for sj, sk in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        c = code.copy()
        c[j] += sj
        c[k] += sk
        corners.append(c // 2)
    ej, ek = np.eye(3)[j], np.eye(3)[k]
    if np.dot(np.cross(ej, ek), normal) < 0:
        corners.reverse()
    return corners


def write_obj(path, surf: DigitalSurface, normals=None, colors: bool = False, config: dict | None = None) -> None:
    """Surfels as quads over pointel vertices (3d only).

    ``normals`` is an optional per-pointel array written as vertex normals;
    with ``colors`` the vertices also carry ``0.5 * (n + 1)`` as RGB.
    """
    if surf.dim != 3:
        raise ValueError("OBJ export needs a 3d surface")
    index = PointIndex(surf.pointels, pad=1)
    pos = surf.pointel_positions()
    with open(path, "w") as fh:
        for line in _header_lines("surface-obj", config):
            fh.write(line + "\n")
        for i, x in enumerate(pos):
            line = f"v {x[0]:.9g} {x[1]:.9g} {x[2]:.9g}"
            if normals is not None and colors:
                c = 0.5 * (np.asarray(normals[i]) + 1.0)
                line += f" {c[0]:.6f} {c[1]:.6f} {c[2]:.6f}"
            fh.write(line + "\n")
        if normals is not None:
            for n in np.asarray(normals):
                fh.write(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
        for code, nrm in zip(surf.surfels, surf.surfel_normals):
            ids = index.lookup(np.array(_quad(code, nrm))) + 1
            if normals is not None:
                fh.write("f " + " ".join(f"{i}//{i}" for i in ids) + "\n")
            else:
                fh.write("f " + " ".join(map(str, ids)) + "\n")
