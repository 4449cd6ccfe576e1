"""CSV tables with a config-hash header line, and the run manifest."""
import csv
import hashlib
import json
import math
import numbers
import os


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def _cell(v):
    if isinstance(v, numbers.Integral) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, numbers.Real) and not isinstance(v, bool):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return v


def write_table(path, rows, chash, columns=None):
    """Write ``rows`` (dicts) as CSV preceded by ``# config_hash=<hash>``."""
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={chash}\n")
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k, "")) for k in columns})
    return path


def read_table(path):
    """Inverse of :func:`write_table`: ``(config_hash, rows)`` with float-able cells converted."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        chash = first.split("=", 1)[1] if first.startswith("# config_hash=") else None
        rows = []
        for row in csv.DictReader(fh):
            out = {}
            for k, v in row.items():
                try:
                    out[k] = float(v)
                except (TypeError, ValueError):
                    out[k] = v
            rows.append(out)
    return chash, rows


class Manifest:
    """Collects emitted artifacts and writes ``manifest.json``."""

    def __init__(self, out_dir, experiment, cfg):
        self.out_dir = out_dir
        self.experiment = experiment
        self.config = cfg
        self.chash = config_hash(cfg)
        self.artifacts = []

    def table(self, name, rows, columns=None):
        path = os.path.join(self.out_dir, f"{name}.csv")
        write_table(path, rows, self.chash, columns)
        self.artifacts.append({"name": name, "path": os.path.basename(path), "rows": len(rows),
                               "kind": "csv"})
        return path

    def json(self, name, obj):
        path = os.path.join(self.out_dir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, default=str)
        self.artifacts.append({"name": name, "path": os.path.basename(path), "kind": "json"})
        return path

    def write(self, checks=None):
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump({"experiment": self.experiment, "config_hash": self.chash,
                       "config": self.config, "artifacts": self.artifacts,
                       "checks": checks or {}}, fh, indent=2, default=str)
        return path
