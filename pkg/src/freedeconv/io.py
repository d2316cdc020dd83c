"""Plain-text file formats: spectra, measures, reports, CSV tables."""
import csv
import hashlib
import json
import math

import numpy as np

from .eigenmatrix import SparseMeasure
from .transforms import Spectrum


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def write_spectrum(path, spectrum):
    """One eigenvalue per line, shortest round-trip decimal."""
    with open(path, "w") as fh:
        for v in spectrum.eigenvalues:
            fh.write(f"{float(v)!r}\n")


def read_spectrum(path):
    with open(path) as fh:
        values = [float(line) for line in fh if line.strip()]
    return Spectrum(np.array(values))


def file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def read_measure(path):
    with open(path) as fh:
        return SparseMeasure.from_dict(json.load(fh))


def write_measure(path, measure):
    write_json(path, measure.to_dict())


def dumps(data):
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, data):
    with open(path, "w") as fh:
        fh.write(dumps(data))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def landscape_rows(landscape):
    """Header and rows: parameter, log s_1 ... log s_K, status."""
    k = landscape.full_curves.shape[0]
    header = ["parameter"] + [f"log_s{i + 1}" for i in range(k)] + ["status"]
    rows = []
    for j, theta in enumerate(landscape.parameter_grid):
        rows.append([_fmt(theta)] + [_fmt(v) for v in landscape.full_curves[:, j]]
                    + [landscape.status[j]])
    return header, rows


def write_landscape(path, landscape):
    header, rows = landscape_rows(landscape)
    _write_csv(path, header, rows)


def read_landscape(path):
    """Return ``(parameters, curves, status)`` with missing entries as NaN."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    k = len(header) - 2
    params = np.array([float(r[0]) for r in rows])
    curves = np.array([[float(v) if v else np.nan for v in r[1:1 + k]] for r in rows]).T
    return params, curves, [r[-1] for r in rows]


def histogram(spectrum):
    """Freedman-Diaconis histogram of the eigenvalues: ``(edges, counts)``."""
    edges = np.histogram_bin_edges(spectrum.eigenvalues, bins="fd")
    counts, _ = np.histogram(spectrum.eigenvalues, bins=edges)
    return edges, counts


def write_histogram(path, spectrum):
    edges, counts = histogram(spectrum)
    rows = [[_fmt(edges[i]), _fmt(edges[i + 1]), str(int(c))] for i, c in enumerate(counts)]
    _write_csv(path, ["bin_left", "bin_right", "count"], rows)


def read_histogram(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = list(reader)
    left = np.array([float(r[0]) for r in rows])
    right = np.array([float(r[1]) for r in rows])
    return np.append(left, right[-1]), np.array([int(r[2]) for r in rows])


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
