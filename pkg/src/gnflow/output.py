"""Run artifacts: snapshots.csv, fields_<t>.f64 blocks, report.csv.

Formats are chosen so that reruns with identical config and seed are
byte-identical on one platform: decimal text with 17 significant digits
for diagnostics (round-trips doubles), raw little-endian f64 blocks for
node fields.  Schema details in docs/output-formats.md.
"""

import os
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GnflowError

__all__ = ["SnapshotRecord", "SnapshotWriter", "field_file_name",
           "write_fields", "read_fields", "write_report", "output_lock",
           "format_float"]

HEADER_BYTES = 32
LOCK_NAME = ".lock"


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class SnapshotRecord:
    """One cadence tick of scalar diagnostics.

    norm_h is the H^sigma norm of (h - swl), norm_u the H^(sigma+1) norm
    of u: the data space of the well-posedness statement.  min_phi_x is
    present on Lagrangian runs only.
    """

    t: float
    mass: float
    energy: float
    norm_h: float
    norm_u: float
    min_phi_x: float = None

    def row(self, lagrangian: bool) -> list:
        vals = [self.t, self.mass, self.energy, self.norm_h, self.norm_u]
        if lagrangian:
            if self.min_phi_x is None:
                raise GnflowError("lagrangian snapshot lacks min_phi_x")
            vals.append(self.min_phi_x)
        return vals


class SnapshotWriter:
    """Incremental snapshots.csv writer; every row is flushed so a
    failing run leaves all rows up to the failure time on disk."""

    COLUMNS = ("t", "mass", "energy", "norm_h", "norm_u")

    def __init__(self, path, lagrangian: bool = False):
        self.lagrangian = bool(lagrangian)
        self.last_t = None
        cols = self.COLUMNS + (("min_phi_x",) if lagrangian else ())
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(",".join(cols) + "\n")
        self._fh.flush()

    def add(self, rec: SnapshotRecord):
        vals = rec.row(self.lagrangian)
        if not all(np.isfinite(v) for v in vals):
            raise GnflowError(f"non-finite snapshot entry at t = {rec.t!r}")
        if self.last_t is not None and not rec.t > self.last_t:
            raise GnflowError(f"snapshot times must increase "
                              f"({rec.t!r} after {self.last_t!r})")
        self.last_t = rec.t
        self._fh.write(",".join(format_float(v) for v in vals) + "\n")
        self._fh.flush()

    def fail(self, exc: BaseException):
        """Append the FAILED sentinel line naming the error."""
        self._fh.write(f"FAILED,{type(exc).__name__}\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


def field_file_name(t: float) -> str:
    return f"fields_{t:g}.f64"


def _pack_header(n: int, L: float, t: float) -> bytes:
    text = f"GNFLOW1 n={n} L={L:g} t={t:g}"
    raw = text.encode("ascii")
    if len(raw) > HEADER_BYTES:
        raise GnflowError(f"field header does not fit in "
                          f"{HEADER_BYTES} bytes: '{text}'")
    return raw.ljust(HEADER_BYTES, b" ")


def write_fields(outdir, t: float, n: int, L: float, arrays) -> str:
    """Write node fields (in the given order) as one raw f64 block file.

    Eulerian runs store (h, u); Lagrangian runs store (disp, vel)."""
    path = os.path.join(outdir, field_file_name(t))
    with open(path, "wb") as fh:
        fh.write(_pack_header(n, L, t))
        for arr in arrays:
            a = np.asarray(arr, dtype="<f8")
            if a.shape != (n,):
                raise GnflowError(f"field block expects length {n}, "
                                  f"got {a.shape}")
            fh.write(a.tobytes())
    return path


def read_fields(path):
    """Inverse of write_fields: returns ({'n', 'L', 't'}, [arrays])."""
    with open(path, "rb") as fh:
        header = fh.read(HEADER_BYTES).decode("ascii").strip()
        body = fh.read()
    tag, *pairs = header.split()
    if tag != "GNFLOW1":
        raise GnflowError(f"not a field block file: '{header}'")
    meta = {}
    for pair in pairs:
        key, val = pair.split("=", 1)
        meta[key] = int(val) if key == "n" else float(val)
    n = meta["n"]
    if len(body) % (8 * n) != 0:
        raise GnflowError(f"field block length {len(body)} is not a "
                          f"multiple of 8*{n}")
    flat = np.frombuffer(body, dtype="<f8")
    return meta, [flat[i * n:(i + 1) * n].copy()
                  for i in range(len(flat) // n)]


def write_report(path, columns, rows):
    """report.csv for experiment modes: plain CSV, floats at 17 digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = [format_float(v) if isinstance(v, float) else str(v)
                     for v in row]
            fh.write(",".join(cells) + "\n")


@contextmanager
def output_lock(outdir):
    """One run per output directory, enforced by a lock sentinel file."""
    path = os.path.join(outdir, LOCK_NAME)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError([f"output directory '{outdir}' is locked by "
                           f"another run (stale? remove {path})"]) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode("ascii"))
        os.close(fd)
        yield
    finally:
        os.unlink(path)
