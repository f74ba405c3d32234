"""GSGF grid files and CSV export.

Layout of a GSGF file (all little-endian)::

    b"GSGF"            magic
    u32                version (1)
    u32                d
    u32 * d            N per axis
    f64 * d            L per axis
    f64 * 2 * prod(N)  samples as (re, im) pairs, row-major
"""

import struct

import numpy as np

from .errors import ValidationError
from .gridfn import GridFunction, GridSpec

MAGIC = b"GSGF"
VERSION = 1


def write_gsgf(path, f):
    spec = f.spec
    head = MAGIC + struct.pack("<II", VERSION, spec.d)
    head += struct.pack(f"<{spec.d}I", *spec.N)
    head += struct.pack(f"<{spec.d}d", *spec.L)
    body = np.ascontiguousarray(f.samples, dtype="<c16").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(head + body)


def read_gsgf(path, meta=None):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValidationError(f"{path}: not a GSGF file")
    version, d = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported GSGF version {version}")
    if d not in (1, 2):
        raise ValidationError(f"{path}: unsupported dimension {d}")
    off = 12
    N = struct.unpack_from(f"<{d}I", data, off)
    off += 4 * d
    L = struct.unpack_from(f"<{d}d", data, off)
    off += 8 * d
    count = int(np.prod(N))
    if len(data) - off != 16 * count:
        raise ValidationError(f"{path}: expected {count} samples, file size disagrees")
    samples = np.frombuffer(data, dtype="<c16", count=count, offset=off).reshape(N)
    spec = GridSpec.make(d, N, L)
    return GridFunction(spec, samples.astype(complex), meta or str(path))


def write_csv(path, f):
    """One row per grid point: ``x_1..x_d, re, im``."""
    pts = f.spec.points().reshape(-1, f.spec.d)
    vals = f.samples.reshape(-1)
    cols = [f"x_{i + 1}" for i in range(f.spec.d)] + ["re", "im"]
    table = np.column_stack([pts, vals.real, vals.imag])
    np.savetxt(path, table, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def read_matrix_csv(path):
    """Real matrix from a comma separated file (used for ``S``)."""
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    return M
