"""CSV/JSON serialization helpers used by the CLI.

Matrices travel as header-free row-major CSV. Floats are written with
repr-exact precision so that round trips and determinism comparisons are
bit-faithful.
"""

import json

import numpy as np


def write_matrix(path, arr):
    arr = np.asarray(arr)
    fmt = "%d" if np.issubdtype(arr.dtype, np.integer) else "%.17g"
    np.savetxt(path, np.atleast_2d(arr), fmt=fmt, delimiter=",")


def read_matrix(path, dtype=float):
    return np.loadtxt(path, delimiter=",", dtype=dtype, ndmin=2)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
