"""Scenario configuration: sectioned ``key = value`` text.

Example::

    [run]
    scenario = trivial-regions

    [model]
    delta = 0.3
    eta = 0.2

    [scan]
    pairs = 0.3:0.2, -0.2:0.3, -0.3:0.2

Unknown sections or keys are rejected, every numeric value must parse as a
decimal real, and omitted keys take the defaults below.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field

from .errors import ParseError, RangeError, UnknownKey
from .model import ModelParams
from .sim import DEFAULT_LENGTH, DEFAULT_N_POINTS

SCENARIOS = (
    "hopf-curves",
    "trivial-dispersion",
    "trivial-regions",
    "pw-roots",
    "pw-branch",
    "pw-stability-finite",
    "pw-strong-map",
    "pw-weak-map",
    "pw-class-map",
    "simulate",
)

# key -> (type, default); None means "derive from the scenario"
SCAN_KEYS = {
    "q": (float, 0.0),
    "q_values": (list, None),
    "branch": (str, None),
    "omega_min": (float, None),
    "omega_max": (float, None),
    "n_omega": (int, None),
    "xi_min": (float, -10.0),
    "xi_max": (float, 10.0),
    "n_xi": (int, 201),
    "q_min": (float, -3.0),
    "q_max": (float, 3.0),
    "n_q": (int, 121),
    "delta_min": (float, 0.0),
    "delta_max": (float, 1.2),
    "n_delta": (int, 25),
    "delta_values": (list, None),
    "eta_min": (float, 0.0),
    "eta_max": (float, 0.5),
    "n_eta": (int, 11),
    "pairs": (list, None),
    "theta_min": (float, 0.0),
    "theta_max": (float, 2 * math.pi),
    "n_theta": (int, 64),
    "theta_values": (list, None),
    "k_min": (float, -3.0),
    "k_max": (float, 3.0),
    "n_k": (int, 121),
    "weak_n_xi": (int, 315),
    "stride": (int, None),
}

SIM_KEYS = {
    "n_points": (int, DEFAULT_N_POINTS),
    "length": (float, DEFAULT_LENGTH),
    "rtol": (float, 1e-6),
    "atol": (float, 1e-9),
    "t_end": (float, 1000.0),
    "snapshot_every": (float, 10.0),
    "observe_every": (float, 1.0),
    "start_q": (float, 0.0),
    "start_omega": (float, 0.0),
    "start_a0": (float, 1.0),
    "perturbation": (str, "modal"),
    "perturbation_amplitude": (float, 1e-3),
    "perturbation_k": (float, None),
    "seed": (int, 0),
}

RUN_KEYS = {"scenario": (str, None), "out": (str, "out")}


@dataclass
class ScenarioConfig:
    scenario: str
    model: ModelParams = field(default_factory=ModelParams)
    scan: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    out: str = "out"

    def resolved(self) -> dict:
        return {
            "run": {"scenario": self.scenario, "out": self.out},
            "model": self.model.as_dict(),
            "scan": dict(self.scan),
            "simulation": dict(self.simulation),
        }


def _num(key, raw, kind, lineno=None):
    try:
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        return float(raw)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {raw!r} as a number", line=lineno) from None


def _parse_list(key, raw, lineno):
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            out.append(tuple(_num(key, part, float, lineno) for part in item.split(":")))
        else:
            out.append(_num(key, item, float, lineno))
    return out or None


def _key_lines(text):
    """Line number of each ``key =`` occurrence, per section."""
    lines = {}
    sec = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            sec = s[1:-1].strip()
        elif "=" in s and not s.startswith("#"):
            lines[(sec, s.split("=", 1)[0].strip().lower())] = i
    return lines


def _coerce(section, key, raw, spec, lineno):
    kind, _ = spec
    if kind is list:
        return _parse_list(key, raw, lineno)
    if kind is str:
        return raw.strip()
    return _num(key, raw, kind, lineno)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",), strict=True
    )
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ParseError("key outside of any section", line=e.lineno) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ParseError(f"malformed line: {e.errors[0][1] if e.errors else ''}", line=lineno) from None
    except configparser.DuplicateOptionError as e:
        raise ParseError(f"duplicate key {e.option!r}", line=e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ParseError(f"duplicate section {e.section!r}", line=e.lineno) from None
    lines = _key_lines(text)

    known = {"run": RUN_KEYS, "model": None, "scan": SCAN_KEYS, "simulation": SIM_KEYS}
    for sec in cp.sections():
        if sec not in known:
            raise UnknownKey(sec, None)

    model_fields = {f.name for f in dataclasses.fields(ModelParams)}
    model_kw = {}
    if cp.has_section("model"):
        for key, raw in cp.items("model"):
            if key not in model_fields:
                raise UnknownKey(key, "model")
            model_kw[key] = _num(key, raw, float, lines.get(("model", key)))

    sections = {}
    for sec in ("run", "scan", "simulation"):
        spec = known[sec]
        vals = {k: d for k, (_, d) in spec.items()}
        if cp.has_section(sec):
            for key, raw in cp.items(sec):
                if key not in spec:
                    raise UnknownKey(key, sec)
                vals[key] = _coerce(sec, key, raw, spec[key], lines.get((sec, key)))
        sections[sec] = vals

    scen = sections["run"]["scenario"]
    if scen is None:
        raise ParseError("missing [run] scenario")
    if scen not in SCENARIOS:
        raise RangeError("scenario", scen, f"must be one of {', '.join(SCENARIOS)}")

    for key in ("beta",):
        if key in model_kw and not model_kw[key] > 0:
            raise RangeError(key, model_kw[key], "must be > 0")
    for key in ("tau", "eta"):
        if key in model_kw and model_kw[key] < 0:
            raise RangeError(key, model_kw[key], "must be >= 0")
    try:
        model = ModelParams(**model_kw)
    except ValueError as e:
        raise RangeError("model", model_kw, str(e)) from None

    _validate(sections["scan"], sections["simulation"])
    return ScenarioConfig(scen, model, sections["scan"], sections["simulation"], sections["run"]["out"])


def _validate(scan, sim):
    for key, v in list(scan.items()) + list(sim.items()):
        if key.startswith("n_") and v is not None and v < 1:
            raise RangeError(key, v, "must be >= 1")
    if scan["branch"] not in (None, "+", "-"):
        raise RangeError("branch", scan["branch"], "must be '+' or '-'")
    if scan["stride"] is not None and scan["stride"] < 1:
        raise RangeError("stride", scan["stride"], "must be >= 1")
    if sim["n_points"] < 16:
        raise RangeError("n_points", sim["n_points"], "must be >= 16")
    for key in ("length", "rtol", "atol", "t_end", "snapshot_every", "observe_every"):
        if not sim[key] > 0:
            raise RangeError(key, sim[key], "must be > 0")
    if sim["start_a0"] < 0:
        raise RangeError("start_a0", sim["start_a0"], "must be >= 0")
    if sim["perturbation"] not in ("none", "modal", "noise"):
        raise RangeError("perturbation", sim["perturbation"], "must be none, modal or noise")
    if sim["perturbation_amplitude"] < 0:
        raise RangeError("perturbation_amplitude", sim["perturbation_amplitude"], "must be >= 0")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, tuple):
        return ":".join(_fmt(x) for x in v)
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Text that parses back to an equal config (defaults written explicitly)."""
    out = ["[run]", f"scenario = {cfg.scenario}", f"out = {cfg.out}", "", "[model]"]
    for k, v in cfg.model.as_dict().items():
        out.append(f"{k} = {_fmt(v)}")
    for name, vals in (("scan", cfg.scan), ("simulation", cfg.simulation)):
        out += ["", f"[{name}]"]
        for k, v in vals.items():
            if v is None or v == []:
                continue
            out.append(f"{k} = {_fmt(v)}")
    return "\n".join(out) + "\n"
