"""Readers for the UCI Daily & Sports Activities and PAMAP2 layouts."""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np

from ..errors import IngestError
from . import layouts
from .types import Activity, IngestConfig, RecordingSegment

log = logging.getLogger(__name__)


def _require_dir(root):
    if root is None:
        raise IngestError("dataset root is not configured")
    path = Path(root)
    if not path.is_dir():
        raise IngestError("dataset directory does not exist", path=path)
    return path


def _class_map(config, default):
    raw = config.activity_map if config.activity_map is not None else default
    return {str(code): Activity.parse(name) for name, code in raw.items()}


def _parse_float_rows(path, delimiter, n_columns):
    """Parse a numeric text file, reporting the first bad line precisely."""
    try:
        with open(path, encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read file ({exc})", path=path) from None
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split(delimiter) if delimiter else line.split()
        if len(parts) != n_columns:
            raise IngestError(f"expected {n_columns} columns, found {len(parts)}", path=path, line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise IngestError("unparseable number", path=path, line=lineno) from None
    return np.array(rows, dtype=np.float64).reshape(-1, n_columns)


def _clean_runs(t_index, accel, policy, max_gap):
    """Repair or drop non-finite rows; yield contiguous (t_index, accel) pieces.

    With ``interpolate``, interior gaps of at most ``max_gap`` rows are filled
    linearly; every other bad row is dropped. A dropped row ends the piece.
    """
    bad = ~np.all(np.isfinite(accel), axis=1)
    if not bad.any():
        if len(t_index):
            yield t_index, accel
        return
    accel = accel.copy()
    keep = ~bad
    if policy == "interpolate" and max_gap > 0:
        n = len(bad)
        i = 0
        while i < n:
            if not bad[i]:
                i += 1
                continue
            j = i
            while j < n and bad[j]:
                j += 1
            # gap is rows i..j-1
            if i > 0 and j < n and (j - i) <= max_gap:
                lo, hi = accel[i - 1], accel[j]
                frac = (np.arange(1, j - i + 1) / (j - i + 1))[:, None]
                accel[i:j] = lo + frac * (hi - lo)
                keep[i:j] = True
            i = j
    start = None
    for k in range(len(keep) + 1):
        if k < len(keep) and keep[k]:
            if start is None:
                start = k
        elif start is not None:
            yield t_index[start:k], accel[start:k]
            start = None


def parse_dsads(root_path, config: IngestConfig):
    """Read the UCI Daily & Sports Activities tree into recording segments.

    One segment is returned per (subject, selected activity, segment file),
    in sorted path order. Activities absent from the map are skipped.
    """
    root = _require_dir(root_path)
    data_dir = root / "data" if (root / "data").is_dir() else root
    cols = list(layouts.dsads_accel_columns(config.sensor or "RA"))
    class_map = _class_map(config, layouts.DSADS_DEFAULT_ACTIVITY_MAP)
    wanted_subjects = set(config.subjects)

    segments = []
    for act_dir in sorted(p for p in data_dir.iterdir() if p.is_dir()):
        activity = class_map.get(act_dir.name)
        if activity is None:
            continue
        for subj_dir in sorted(p for p in act_dir.iterdir() if p.is_dir()):
            m = re.fullmatch(r"p(\d+)", subj_dir.name)
            if not m:
                continue
            subject = int(m.group(1))
            if wanted_subjects and subject not in wanted_subjects:
                continue
            for seg_file in sorted(subj_dir.glob("s*.txt")):
                rows = _parse_float_rows(seg_file, ",", layouts.DSADS_N_COLUMNS)
                if rows.shape[0] != layouts.DSADS_ROWS_PER_SEGMENT:
                    raise IngestError(
                        f"expected {layouts.DSADS_ROWS_PER_SEGMENT} rows, found {rows.shape[0]}",
                        path=seg_file,
                    )
                t = np.arange(rows.shape[0])
                for t_piece, a_piece in _clean_runs(t, rows[:, cols], config.nan_policy, config.max_gap):
                    segments.append(
                        RecordingSegment(
                            subject_id=subject,
                            activity=activity,
                            raw_code=act_dir.name,
                            t_index=t_piece,
                            accel=a_piece,
                            sample_rate_hz=layouts.DSADS_SAMPLE_RATE_HZ,
                            source=str(seg_file),
                        )
                    )
    return segments


def _load_pamap2_file(path):
    try:
        rows = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except (ValueError, OSError):
        rows = None
    if rows is None or (rows.size and rows.shape[1] != layouts.PAMAP2_N_COLUMNS):
        # slow path only to locate the offending line
        rows = _parse_float_rows(path, None, layouts.PAMAP2_N_COLUMNS)
    return rows.reshape(-1, layouts.PAMAP2_N_COLUMNS)


def _pamap2_files(root):
    base = root / "Protocol" if (root / "Protocol").is_dir() else root
    found = {}
    for p in sorted(base.glob("subject*.dat")):
        m = re.fullmatch(r"subject(\d+)\.dat", p.name)
        if m:
            found[int(m.group(1))] = p
    return found


def parse_pamap2(root_path, config: IngestConfig):
    """Read PAMAP2 protocol files into recording segments.

    Rows are grouped into runs of one mapped activity; a run ends at any
    activity change (including the transient id 0) and at any dropped row.
    When ``config.subjects`` is empty, subjects that lack any mapped class
    are excluded and the exclusion is logged.
    """
    root = _require_dir(root_path)
    files = _pamap2_files(root)
    if config.subjects:
        missing = [s for s in config.subjects if s not in files]
        if missing:
            raise IngestError(f"configured subject(s) {missing} have no subjectNNN.dat file", path=root)
        files = {s: files[s] for s in sorted(config.subjects)}
    class_map = {int(code): act for code, act in _class_map(config, layouts.PAMAP2_DEFAULT_ACTIVITY_MAP).items()}
    cols = list(layouts.pamap2_accel_columns(config.sensor or "hand"))

    segments = []
    for subject, path in files.items():
        rows = _load_pamap2_file(path)
        act_col = rows[:, layouts.PAMAP2_ACTIVITY_COLUMN]
        if not np.all(np.isfinite(act_col)):
            bad = int(np.flatnonzero(~np.isfinite(act_col))[0]) + 1
            raise IngestError("activity id is not a number", path=path, line=bad)
        act_ids = act_col.astype(np.int64)
        n = len(act_ids)
        i = 0
        while i < n:
            j = i + 1
            while j < n and act_ids[j] == act_ids[i]:
                j += 1
            activity = class_map.get(int(act_ids[i]))
            if activity is not None:
                t = np.arange(i, j)
                for t_piece, a_piece in _clean_runs(t, rows[i:j][:, cols], config.nan_policy, config.max_gap):
                    segments.append(
                        RecordingSegment(
                            subject_id=subject,
                            activity=activity,
                            raw_code=str(int(act_ids[i])),
                            t_index=t_piece,
                            accel=a_piece,
                            sample_rate_hz=layouts.PAMAP2_SAMPLE_RATE_HZ,
                            source=str(path),
                        )
                    )
            i = j

    if not config.subjects:
        wanted = set(class_map.values())
        have = {}
        for seg in segments:
            have.setdefault(seg.subject_id, set()).add(seg.activity)
        excluded = [s for s in files if have.get(s, set()) != wanted]
        if excluded:
            log.info("excluding PAMAP2 subjects lacking a mapped activity: %s", excluded)
            segments = [seg for seg in segments if seg.subject_id not in excluded]
    return segments
