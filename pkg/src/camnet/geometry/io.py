"""Mesh file loading and writing (OBJ, STL, PLY).

All loaders return a :class:`TriangleMesh` and log a one-line summary with
the triangle count, the number of dropped degenerate triangles, and the
bounds. Formats are picked from the file extension unless forced.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh

log = logging.getLogger(__name__)

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class MeshLoadError(ValueError):
    """Raised for unreadable or malformed mesh files."""


def load_mesh(path, fmt: str | None = None) -> TriangleMesh:
    """Load a triangle mesh from an OBJ, STL, or PLY file.

    ``fmt`` forces the format; otherwise the extension decides. Polygon
    faces are fan-triangulated. Raises :class:`MeshLoadError` on missing
    files, unknown formats, or malformed content.
    """
    path = Path(path)
    if not path.is_file():
        raise MeshLoadError(f"mesh file not found: {path}")
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "obj":
        mesh = _load_obj(path)
    elif fmt == "stl":
        mesh = _load_stl(path)
    elif fmt == "ply":
        mesh = _load_ply(path)
    else:
        raise MeshLoadError(f"unsupported mesh format {fmt!r} for {path}")
    b = mesh.bounds()
    log.info(
        "loaded %s: %d triangles (%d degenerate dropped), bounds %s to %s",
        path.name, mesh.n_triangles, mesh.n_dropped_degenerate,
        np.round(b.min, 4).tolist(), np.round(b.max, 4).tolist(),
    )
    return mesh


def _load_obj(path: Path) -> TriangleMesh:
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    labels: list[int] = []
    names: list[str] = []
    current = -1
    with open(path, "r", errors="replace") as fh:
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            try:
                if tag == "v":
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                elif tag == "f":
                    idx = [_obj_index(p, len(verts)) for p in parts[1:]]
                    if len(idx) < 3:
                        raise ValueError("face with fewer than 3 vertices")
                    for a, b in zip(idx[1:-1], idx[2:]):
                        faces.append((idx[0], a, b))
                        labels.append(current)
                elif tag in ("o", "g"):
                    names.append(parts[1] if len(parts) > 1 else "")
                    current = len(names) - 1
            except (ValueError, IndexError) as exc:
                raise MeshLoadError(f"{path}:{lineno}: malformed OBJ line: {exc}") from exc
    has_labels = current >= 0
    return TriangleMesh(
        np.array(verts, np.float64).reshape(-1, 3),
        np.array(faces, np.int32).reshape(-1, 3),
        labels=labels if has_labels else None,
        label_names=names if has_labels else None,
    )


def _obj_index(token: str, n_verts: int) -> int:
    i = int(token.split("/")[0])
    if i == 0:
        raise ValueError("OBJ indices are 1-based, got 0")
    i = i - 1 if i > 0 else n_verts + i
    if not 0 <= i < n_verts:
        raise ValueError(f"vertex index {token} out of range")
    return i


def _load_stl(path: Path) -> TriangleMesh:
    data = path.read_bytes()
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            return _parse_stl_binary(data, count)
    if data[:5].lower() == b"solid":
        return _parse_stl_ascii(path, data)
    raise MeshLoadError(f"{path}: not a valid binary or ASCII STL file")


def _parse_stl_binary(data: bytes, count: int) -> TriangleMesh:
    rec = np.dtype([("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")])
    body = np.frombuffer(data, rec, count=count, offset=84)
    verts = body["verts"].reshape(-1, 3).astype(np.float64)
    tris = np.arange(3 * count, dtype=np.int32).reshape(-1, 3)
    return TriangleMesh(verts, tris)


def _parse_stl_ascii(path: Path, data: bytes) -> TriangleMesh:
    verts: list[tuple[float, float, float]] = []
    for lineno, raw in enumerate(data.decode(errors="replace").splitlines(), 1):
        parts = raw.split()
        if parts and parts[0] == "vertex":
            try:
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except (ValueError, IndexError) as exc:
                raise MeshLoadError(f"{path}:{lineno}: malformed STL vertex") from exc
    if len(verts) % 3:
        raise MeshLoadError(f"{path}: vertex count not a multiple of 3")
    tris = np.arange(len(verts), dtype=np.int32).reshape(-1, 3)
    return TriangleMesh(np.array(verts, np.float64).reshape(-1, 3), tris)


def _load_ply(path: Path) -> TriangleMesh:
    with open(path, "rb") as fh:
        header, fmt = _read_ply_header(path, fh)
        elements = header  # list of (name, count, props)
        verts = None
        faces: list[tuple[int, int, int]] = []
        for name, count, props in elements:
            if fmt == "ascii":
                rows = [fh.readline().split() for _ in range(count)]
                if name == "vertex":
                    verts = _ply_ascii_vertices(path, rows, props)
                elif name == "face":
                    faces = _ply_ascii_faces(path, rows, props)
                # other elements: parsed and ignored
            else:
                order = "<" if fmt == "binary_little_endian" else ">"
                if name == "vertex":
                    verts = _ply_binary_vertices(path, fh, count, props, order)
                elif name == "face":
                    faces = _ply_binary_faces(path, fh, count, props, order)
                else:
                    _skip_ply_binary(path, fh, count, props, order)
    if verts is None:
        raise MeshLoadError(f"{path}: PLY file has no vertex element")
    tris = np.array(faces, np.int32).reshape(-1, 3)
    return TriangleMesh(verts, tris)


def _read_ply_header(path: Path, fh):
    if fh.readline().strip() != b"ply":
        raise MeshLoadError(f"{path}: missing 'ply' magic line")
    fmt = None
    elements: list[tuple[str, int, list]] = []
    while True:
        line = fh.readline()
        if not line:
            raise MeshLoadError(f"{path}: unterminated PLY header")
        parts = line.decode("ascii", errors="replace").split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt = parts[1]
            if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
                raise MeshLoadError(f"{path}: unsupported PLY format {fmt!r}")
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshLoadError(f"{path}: property before any element")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[1], parts[2]))
        elif parts[0] == "end_header":
            break
    if fmt is None:
        raise MeshLoadError(f"{path}: PLY header has no format line")
    return elements, fmt


def _ply_ascii_vertices(path, rows, props):
    cols = {}
    i = 0
    for p in props:
        if p[0] != "scalar":
            raise MeshLoadError(f"{path}: list property on vertex element")
        cols[p[2]] = i
        i += 1
    try:
        xyz = [(float(r[cols["x"]]), float(r[cols["y"]]), float(r[cols["z"]])) for r in rows]
    except KeyError as exc:
        raise MeshLoadError(f"{path}: vertex element missing {exc} property") from exc
    except (ValueError, IndexError) as exc:
        raise MeshLoadError(f"{path}: malformed PLY vertex row") from exc
    return np.array(xyz, np.float64).reshape(-1, 3)


def _ply_ascii_faces(path, rows, props):
    if not props or props[0][0] != "list":
        raise MeshLoadError(f"{path}: face element must start with a list property")
    faces = []
    for r in rows:
        try:
            n = int(r[0])
            idx = [int(t) for t in r[1 : 1 + n]]
        except (ValueError, IndexError) as exc:
            raise MeshLoadError(f"{path}: malformed PLY face row") from exc
        if n < 3 or len(idx) != n:
            raise MeshLoadError(f"{path}: PLY face with {n} indices")
        for a, b in zip(idx[1:-1], idx[2:]):
            faces.append((idx[0], a, b))
    return faces


def _ply_scalar_dtype(path, props, order):
    fields = []
    for j, p in enumerate(props):
        if p[0] != "scalar":
            raise MeshLoadError(f"{path}: unexpected list property")
        fields.append((f"f{j}", order + _PLY_TYPES[p[1]]))
    return np.dtype(fields)


def _ply_binary_vertices(path, fh, count, props, order):
    dt = _ply_scalar_dtype(path, props, order)
    raw = fh.read(dt.itemsize * count)
    if len(raw) != dt.itemsize * count:
        raise MeshLoadError(f"{path}: truncated PLY vertex data")
    arr = np.frombuffer(raw, dt)
    names = [p[2] for p in props]
    try:
        cols = [names.index(c) for c in ("x", "y", "z")]
    except ValueError as exc:
        raise MeshLoadError(f"{path}: vertex element missing x/y/z") from exc
    out = np.empty((count, 3), np.float64)
    for k, j in enumerate(cols):
        out[:, k] = arr[f"f{j}"].astype(np.float64)
    return out


def _ply_binary_faces(path, fh, count, props, order):
    if len(props) != 1 or props[0][0] != "list":
        raise MeshLoadError(f"{path}: face element must be a single list property")
    cdt = np.dtype(order + _PLY_TYPES[props[0][1]])
    idt = np.dtype(order + _PLY_TYPES[props[0][2]])
    faces = []
    for _ in range(count):
        raw = fh.read(cdt.itemsize)
        if len(raw) != cdt.itemsize:
            raise MeshLoadError(f"{path}: truncated PLY face data")
        n = int(np.frombuffer(raw, cdt)[0])
        raw = fh.read(idt.itemsize * n)
        if len(raw) != idt.itemsize * n:
            raise MeshLoadError(f"{path}: truncated PLY face data")
        idx = np.frombuffer(raw, idt).astype(np.int64)
        if n < 3:
            raise MeshLoadError(f"{path}: PLY face with {n} indices")
        for a, b in zip(idx[1:-1], idx[2:]):
            faces.append((int(idx[0]), int(a), int(b)))
    return faces


def _skip_ply_binary(path, fh, count, props, order):
    if all(p[0] == "scalar" for p in props):
        dt = _ply_scalar_dtype(path, props, order)
        fh.seek(dt.itemsize * count, 1)
        return
    for _ in range(count):
        for p in props:
            if p[0] == "scalar":
                fh.seek(np.dtype(_PLY_TYPES[p[1]]).itemsize, 1)
            else:
                cdt = np.dtype(order + _PLY_TYPES[p[1]])
                n = int(np.frombuffer(fh.read(cdt.itemsize), cdt)[0])
                fh.seek(np.dtype(_PLY_TYPES[p[2]]).itemsize * n, 1)


def save_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def save_stl(mesh: TriangleMesh, path) -> None:
    """Write binary STL. Vertex positions are truncated to float32."""
    tri = mesh.triangle_vertices().astype(np.float32)
    n = len(tri)
    rec = np.zeros(n, np.dtype([("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")]))
    rec["verts"] = tri
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", n))
        fh.write(rec.tobytes())


def save_ply(mesh: TriangleMesh, path, binary: bool = True) -> None:
    n_v, n_f = mesh.n_vertices, mesh.n_triangles
    header = (
        "ply\n"
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0\n"
        f"element vertex {n_v}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {n_f}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(mesh.vertices.astype("<f8").tobytes())
            face = np.empty(n_f, np.dtype([("n", "u1"), ("idx", "<i4", 3)]))
            face["n"] = 3
            face["idx"] = mesh.triangles
            fh.write(face.tobytes())
        else:
            lines = [f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n" for v in mesh.vertices]
            lines += [f"3 {t[0]} {t[1]} {t[2]}\n" for t in mesh.triangles]
            fh.write("".join(lines).encode("ascii"))
