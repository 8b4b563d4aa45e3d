"""Reading directional datasets and writing region, boundary and trace files."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import angle_to_unit, lonlat_to_unit, unit_to_angle, unit_to_lonlat
from .levelsets import Region, boundary_polylines, extract_boundary

log = logging.getLogger(__name__)

FORMATS = ("angles-rad", "angles-deg", "lonlat-deg", "xyz")
_NCOLS = {"angles-rad": 1, "angles-deg": 1, "lonlat-deg": 2}


class IngestError(ValueError):
    pass


@dataclass
class Dataset:
    q: int
    points: np.ndarray
    path: str = ""
    format: str = ""
    n_rows: int = 0
    n_skipped: int = 0
    warnings: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.points)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def ingest(path, fmt: str) -> Dataset:
    """Parse a CSV of directions.

    A header row is detected when the first row is not numeric.  Malformed
    rows are skipped and counted; xyz rows with norm in [0.99, 1.01] are
    renormalized, others rejected.  More than half the rows rejected is an
    error.
    """
    if fmt not in FORMATS:
        raise IngestError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0] if c.strip()):
        rows = rows[1:]
    pts, warns = [], []
    for lineno, row in enumerate(rows, 1):
        cells = [c.strip() for c in row if c.strip()]
        try:
            vals = [float(c) for c in cells]
            if not all(np.isfinite(vals)):
                raise ValueError("non-finite value")
            pts.append(_convert(vals, fmt))
        except ValueError as exc:
            warns.append(f"row {lineno}: {exc}")
    skipped = len(rows) - len(pts)
    for w in warns:
        log.warning("%s: %s", path, w)
    if not rows or skipped > 0.5 * len(rows):
        raise IngestError(f"{path}: {skipped} of {len(rows)} rows rejected")
    dims = {len(p) for p in pts}
    if len(dims) != 1:
        raise IngestError(f"{path}: rows mix circle and sphere coordinates")
    arr = np.array(pts)
    return Dataset(arr.shape[1] - 1, arr, str(path), fmt, len(rows), skipped, warns)


def _convert(vals, fmt):
    need = _NCOLS.get(fmt)
    if need is not None and len(vals) != need:
        raise ValueError(f"expected {need} column(s), got {len(vals)}")
    if fmt == "angles-rad":
        return angle_to_unit(vals[0])
    if fmt == "angles-deg":
        return angle_to_unit(np.deg2rad(vals[0]))
    if fmt == "lonlat-deg":
        return lonlat_to_unit(vals[0], vals[1])
    if len(vals) not in (2, 3):
        raise ValueError(f"expected 2 or 3 coordinates, got {len(vals)}")
    v = np.array(vals)
    norm = np.linalg.norm(v)
    if not 0.99 <= norm <= 1.01:
        raise ValueError(f"norm {norm:.4g} too far from 1")
    return v / norm


def export_points(points, path, fmt: str) -> None:
    """Write points so that :func:`ingest` with the same format reads them back."""
    points = np.asarray(points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if fmt == "angles-rad":
            w.writerow(["angle_rad"])
            w.writerows([[repr(float(a))] for a in unit_to_angle(points)])
        elif fmt == "angles-deg":
            w.writerow(["angle_deg"])
            w.writerows([[repr(float(a))] for a in np.rad2deg(unit_to_angle(points))])
        elif fmt == "lonlat-deg":
            lon, lat = unit_to_lonlat(points)
            w.writerow(["lon", "lat"])
            w.writerows([[repr(float(a)), repr(float(b))] for a, b in zip(lon, lat)])
        elif fmt == "xyz":
            w.writerow(["x", "y", "z"][: points.shape[1]])
            w.writerows([[repr(float(c)) for c in p] for p in points])
        else:
            raise IngestError(f"unknown format {fmt!r}")


# --- region exports -------------------------------------------------------

def write_arcs_csv(region: Region, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["start_rad", "end_rad"])
        for a, b in region.arcs:
            w.writerow([repr(float(a)), repr(float(b))])


def write_boundary_csv(points, path) -> None:
    points = np.asarray(points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z"][: points.shape[1]])
        w.writerows([[repr(float(c)) for c in p] for p in points])


def write_mask_csv(region: Region, path) -> None:
    """Raster of the region on the lon/lat grid: one row per latitude."""
    grid = region.grid
    M = region.mask.reshape(grid.shape).astype(int)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lat"] + [repr(float(lo)) for lo in grid.lon])
        for la, row in zip(grid.lat, M):
            w.writerow([repr(float(la))] + row.tolist())


def region_geojson(region: Region, properties: dict | None = None) -> dict:
    feats = []
    for line, closed in boundary_polylines(region):
        lon, lat = unit_to_lonlat(line)
        coords = [[round(float(a), 10), round(float(b), 10)] for a, b in zip(lon, lat)]
        if closed:
            coords[-1] = coords[0]
        props = {"level": region.level, "closed": closed}
        props.update(properties or {})
        feats.append({"type": "Feature", "properties": props,
                      "geometry": {"type": "LineString", "coordinates": coords}})
    return {"type": "FeatureCollection", "features": feats}


def write_geojson(region: Region, path, properties: dict | None = None) -> None:
    Path(path).write_text(json.dumps(region_geojson(region, properties)))


def write_region(region: Region, out_dir, stem: str, properties: dict | None = None) -> list[Path]:
    """Write every export of a region; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if region.q == 1:
        p = out_dir / f"{stem}_arcs.csv"
        write_arcs_csv(region, p)
        written.append(p)
    else:
        p = out_dir / f"{stem}_mask.csv"
        write_mask_csv(region, p)
        g = out_dir / f"{stem}_contours.geojson"
        write_geojson(region, g, properties)
        written += [p, g]
    if region.is_proper:
        b = out_dir / f"{stem}_boundary.csv"
        write_boundary_csv(extract_boundary(region).points, b)
        written.append(b)
    return written


def read_boundary_file(path) -> np.ndarray:
    """Boundary points from a boundary CSV (x,y[,z]), an arcs CSV or a GeoJSON contour file."""
    path = Path(path)
    if path.suffix.lower() in (".geojson", ".json"):
        data = json.loads(path.read_text())
        pts = []
        for feat in data.get("features", []):
            pts.extend(feat["geometry"]["coordinates"])
        if not pts:
            return np.empty((0, 3))
        arr = np.array(pts, dtype=float)
        return lonlat_to_unit(arr[:, 0], arr[:, 1])
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        return np.empty((0, 2))
    header = [c.strip() for c in rows[0]]
    body = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float) if len(rows) > 1 else None
    if header[:2] == ["start_rad", "end_rad"]:
        if body is None:
            return np.empty((0, 2))
        return angle_to_unit(np.concatenate([body[:, 0], body[:, 1]]))
    if header[0] == "x":
        if body is None:
            return np.empty((0, len(header)))
        return body / np.linalg.norm(body, axis=1)[:, None]
    raise IngestError(f"{path}: unrecognized boundary file header {header}")


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "objective"])
        for h, v in np.asarray(trace):
            w.writerow([repr(float(h)), repr(float(v))])
