"""Parsed view of a maxslice run directory.

A run directory holds `manifest.json` plus CSV tables (`solution.csv`,
`geometry.csv`, `boundary.csv`, `convergence.csv`) as written by the
maxslice CLI.  This module only reads those files; every number a figure
displays traces back to them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class ArtifactError(Exception):
    pass


def _load_table(path):
    """CSV with one header line -> dict of numeric column arrays.

    Non-numeric columns (e.g. grid labels in convergence tables) are dropped.
    """
    lines = path.read_text().strip().splitlines()
    names = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    if any(len(r) != len(names) for r in rows):
        raise ArtifactError(f"{path.name}: column count mismatch")
    out = {}
    for i, name in enumerate(names):
        try:
            out[name] = np.array([float(r[i]) for r in rows])
        except ValueError:
            continue
    return out


@dataclass
class RunArtifacts:
    run_dir: Path
    manifest: dict
    tables: dict = field(default_factory=dict)

    @classmethod
    def load(cls, run_dir):
        run_dir = Path(run_dir)
        mpath = run_dir / "manifest.json"
        if not mpath.exists():
            raise ArtifactError(f"{run_dir} has no manifest.json")
        manifest = json.loads(mpath.read_text())
        if manifest.get("schema_version") != SCHEMA_VERSION:
            raise ArtifactError(
                f"manifest schema {manifest.get('schema_version')!r} "
                f"!= supported {SCHEMA_VERSION}")
        tables = {}
        for name in ("solution", "geometry", "boundary", "convergence"):
            path = run_dir / f"{name}.csv"
            if path.exists():
                tables[name] = _load_table(path)
        return cls(run_dir=run_dir, manifest=manifest, tables=tables)

    # -- manifest lookups (single source of truth for displayed numbers) --

    def result(self, *keys, default=None):
        node = self.manifest.get("results", {})
        for k in keys:
            if not isinstance(node, dict) or k not in node:
                return default
            node = node[k]
        return node

    @property
    def command(self):
        return self.manifest.get("command")

    @property
    def decay_exponent(self):
        node = self.result("geometry", "h2_decay")
        return None if node is None else node.get("exponent")

    @property
    def decay_window(self):
        node = self.result("geometry", "h2_decay")
        return None if node is None else tuple(node.get("window", ()))

    def table(self, name):
        if name not in self.tables:
            raise ArtifactError(f"{self.run_dir} has no {name}.csv")
        return self.tables[name]

    def has(self, name):
        return name in self.tables
