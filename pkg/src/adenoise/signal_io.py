"""CSV files of complex signals (columns ``tau,re,im``) and solution files."""
import csv
import json

import numpy as np

from .errors import InvalidArgument
from .signals import ComplexSignal

__all__ = ["write_signal", "read_signal", "write_solution", "read_solution", "fmt"]


def fmt(value):
    """Shortest round-trip text for a float; integers stay integers."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_signal(path, signal):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "re", "im"])
        for k, z in enumerate(signal.values):
            w.writerow([signal.support_start + k, fmt(z.real), fmt(z.imag)])


def read_signal(path):
    """Read ``tau,re,im`` rows; ``tau`` must be consecutive integers."""
    taus, vals = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["tau", "re", "im"]:
            raise InvalidArgument(f"{path}: expected header 'tau,re,im'")
        for line, row in enumerate(reader, start=2):
            try:
                taus.append(int(row["tau"]))
                vals.append(complex(float(row["re"]), float(row["im"])))
            except (TypeError, ValueError) as exc:
                raise InvalidArgument(f"{path}:{line}: malformed row ({exc})") from None
    if not taus:
        raise InvalidArgument(f"{path}: no samples")
    if any(b - a != 1 for a, b in zip(taus, taus[1:])):
        raise InvalidArgument(f"{path}: tau must increase by one on every row")
    return ComplexSignal(np.array(vals), taus[0])


def write_solution(path, payload):
    """Dump a JSON-serializable dict; numpy arrays become lists."""
    def convert(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    with open(path, "w") as fh:
        json.dump(payload, fh, default=convert, indent=1)
        fh.write("\n")


def read_solution(path):
    with open(path) as fh:
        return json.load(fh)
