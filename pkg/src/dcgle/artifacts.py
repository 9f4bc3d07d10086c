"""CSV artifacts with JSON metadata sidecars, and matplotlib script emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import SchemaMismatch

CLASS_CODES = {0: "Stable", 1: "Weak", 2: "Strong", 3: "NoSolution"}


@dataclass
class CsvArtifact:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    tag: Optional[str] = None
    path: Optional[str] = None

    def __post_init__(self):
        n = len(self.columns)
        for r in self.rows:
            if len(r) != n:
                raise ValueError(f"{self.name}: row of length {len(r)} under {n} columns")

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"{self.name}: row of length {len(row)} under {len(self.columns)} columns")
        self.rows.append(tuple(row))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def format_value(v) -> str:
    """17 significant digits for floats so values round-trip exactly."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def to_csv_text(art: CsvArtifact) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(art.columns)
    for r in art.rows:
        w.writerow([format_value(v) for v in r])
    return buf.getvalue()


def write_artifact(art: CsvArtifact, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, art.name + ".csv")
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(to_csv_text(art))
    with open(path[:-4] + ".meta.json", "w", newline="\n", encoding="utf-8") as fh:
        json.dump(art.metadata, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    art.path = path
    return path


def _json_default(v):
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    return str(v)


def read_csv(path: str):
    """``(columns, rows)`` with numeric cells converted to float."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        cols = next(r)
        rows = []
        for line in r:
            out = []
            for c in line:
                try:
                    out.append(float(c))
                except ValueError:
                    out.append(c)
            rows.append(tuple(out))
    return cols, rows


# ---------------------------------------------------------------------------
# plot scripts

_HEAD = '''"""Render {tag} from {csv}."""
import csv

import matplotlib.pyplot as plt
import numpy as np

with open({csv!r}, newline="") as fh:
    rows = list(csv.reader(fh))
cols = rows[0]
raw = rows[1:]
'''

_BODIES = {
    "hopf-curves": (
        ("omega", "eta", "delta", "q"),
        '''data = np.array([[float(c) for c in r] for r in raw])
d = {c: data[:, i] for i, c in enumerate(cols)}
fig, ax = plt.subplots()
for q in np.unique(d["q"]):
    s = d["q"] == q
    ax.plot(d["delta"][s], d["eta"][s], ".", ms=1, label=f"q={q:g}")
# A = 0 is stable at least where delta < -|eta|
e = np.linspace(-1, 1, 201)
ax.fill_between(-np.abs(e), e, color="0.85", zorder=0)
ax.set_xlabel("delta")
ax.set_ylabel("eta")
ax.legend()
''',
    ),
    "trivial-dispersion": (
        ("xi", "q", "gamma"),
        '''data = np.array([[float(c) for c in r] for r in raw])
xi = np.unique(data[:, 0])
q = np.unique(data[:, 1])
g = data[:, 2].reshape(xi.size, q.size)
fig, ax = plt.subplots()
m = ax.pcolormesh(q, xi, g, shading="auto", cmap="RdBu_r", vmin=-2, vmax=2)
ax.contour(q, xi, g, levels=[0], colors="k")
fig.colorbar(m, label="gamma")
ax.set_xlabel("q")
ax.set_ylabel("xi")
''',
    ),
    "trivial-regions": (
        ("delta", "eta", "class", "two_regions"),
        '''data = np.array([[float(c) for c in r] for r in raw])
fig, ax = plt.subplots()
sc = ax.scatter(data[:, 0], data[:, 1], c=data[:, 2], cmap="viridis", vmin=0, vmax=2)
ax.set_xlabel("delta")
ax.set_ylabel("eta")
fig.colorbar(sc, label="0 stable, 1 weak, 2 strong")
''',
    ),
    "pw-roots": (
        ("omega", "a0", "theta", "branch"),
        '''om = np.array([float(r[0]) for r in raw])
a0 = np.array([float(r[1]) for r in raw])
br = np.array([r[3] for r in raw])
fig, ax = plt.subplots()
for b, c in (("+", "tab:red"), ("-", "tab:blue")):
    ax.plot(om[br == b], a0[br == b], "o", color=c, label=b)
ax.set_xlabel("omega")
ax.set_ylabel("a0")
ax.legend()
''',
    ),
    "pw-branch": (
        ("omega", "a0", "delta", "theta", "segment_id"),
        '''data = np.array([[float(c) for c in r] for r in raw])
fig, ax = plt.subplots()
for s in np.unique(data[:, 4]):
    m = data[:, 4] == s
    ax.plot(data[m, 2], data[m, 1], "k-", lw=0.8)
ax.set_xlabel("delta")
ax.set_ylabel("a0")
''',
    ),
    "pw-stability-finite": (
        ("omega", "a0", "delta", "theta", "segment_id", "max_re_lambda", "argmax_k", "class"),
        '''data = np.array([[float(c) for c in r] for r in raw])
fig, ax = plt.subplots()
colors = {0: "tab:green", 1: "tab:orange", 2: "tab:red"}
for c, col in colors.items():
    m = data[:, 7] == c
    ax.plot(data[m, 2], data[m, 1], ".", color=col, ms=2)
ax.set_xlabel("delta")
ax.set_ylabel("a0")
''',
    ),
    "map": (
        ("delta", "theta", None),
        '''data = np.array([[float(c) for c in r] for r in raw])
delta = np.unique(data[:, 0])
theta = np.unique(data[:, 1])
v = data[:, 2].reshape(delta.size, theta.size)
fig, ax = plt.subplots()
m = ax.pcolormesh(delta, theta, v.T, shading="auto")
fig.colorbar(m, label=cols[2])
ax.set_xlabel("delta")
ax.set_ylabel("theta")
''',
    ),
    "projection": (
        ("delta", "a0", "class"),
        '''data = np.array([[float(c) for c in r] for r in raw])
fig, ax = plt.subplots()
shade = {0: "0.3", 1: "0.7", 2: "1.0"}
for c, col in shade.items():
    m = data[:, 2] == c
    ax.plot(data[m, 0], data[m, 1], "s", color=col, mec="0.5", mew=0.2, ms=3)
ax.set_xlabel("delta")
ax.set_ylabel("a0")
''',
    ),
    "simulate": (
        ("t", "j", "x", "re", "im"),
        '''data = np.array([[float(c) for c in r] for r in raw])
t = np.unique(data[:, 0])
x = np.unique(data[:, 2])
re = data[:, 3].reshape(t.size, x.size)
fig, ax = plt.subplots()
m = ax.pcolormesh(x, t, re, shading="auto", cmap="RdBu_r")
fig.colorbar(m, label="Re A")
ax.set_xlabel("x")
ax.set_ylabel("t")
''',
    ),
    "observables": (
        ("t", "mean_amp", "max_amp", "dominant_q", "omega_est", "defect_count"),
        '''data = np.array([[float(c) for c in r] for r in raw])
fig, axs = plt.subplots(2, 1, sharex=True)
axs[0].plot(data[:, 0], data[:, 1], label="mean |A|")
axs[0].plot(data[:, 0], data[:, 2], label="max |A|")
axs[0].legend()
axs[1].plot(data[:, 0], data[:, 3])
axs[1].set_ylabel("dominant q")
axs[1].set_xlabel("t")
''',
    ),
}

FIGURE_TAGS = tuple(_BODIES)


def emit_plot_script(art: CsvArtifact, figure_tag: str) -> str:
    """Standalone matplotlib script that draws ``figure_tag`` from the artifact's CSV."""
    if figure_tag not in _BODIES:
        raise SchemaMismatch(f"unknown figure tag {figure_tag!r}")
    expected, body = _BODIES[figure_tag]
    cols = tuple(art.columns)
    if len(cols) != len(expected) or any(e is not None and e != c for e, c in zip(expected, cols)):
        raise SchemaMismatch(f"{art.name}: columns {cols} do not fit figure {figure_tag!r}")
    csv_name = os.path.basename(art.path) if art.path else art.name + ".csv"
    png = csv_name[:-4] + ".png"
    return _HEAD.format(tag=figure_tag, csv=csv_name) + body + f'fig.savefig({png!r}, dpi=150)\n'
