"""Strict plain-text configuration: [section] blocks of key = value lines.

Unknown sections or keys are rejected with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import nonlinearity as nl
from . import radial

ALLOWED_KEYS = {
    "nonlinearity": {"kind", "gamma", "q", "p", "alpha", "theta", "potential.kind", "potential.coeffs"},
    "solver": {"n", "grid", "newton_tol", "max_iters", "damping"},
    "branch": {"M_start", "M_end", "dM"},
    "counterexample": {"alpha", "ell_rho", "ell_max", "grid_points"},
    "output": {"dir", "formats"},
}


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        loc = f"{path or 'config'}:{line}: " if line is not None else ""
        super().__init__(loc + message)
        self.line = line
        self.path = path


@dataclass
class RunConfig:
    path: str
    sections: dict = field(default_factory=dict)
    text: str = ""

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def as_dict(self):
        return {s: dict(kv) for s, kv in self.sections.items()}


def parse_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    cfg = RunConfig(path=str(path), text=text)
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ALLOWED_KEYS:
                raise ConfigError(f"unknown section [{section}]", lineno, path)
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, path)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno, path)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in ALLOWED_KEYS[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, path)
        if key in cfg.sections[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno, path)
        cfg.sections[section][key] = value
    return cfg


def _floats(value):
    return tuple(float(v) for v in value.replace(",", " ").split())


def spec_from_config(cfg):
    sec = cfg.sections.get("nonlinearity", {})
    kind = sec.get("kind", "PureExp")
    pot_kind = sec.get("potential.kind", "Constant")
    coeffs = _floats(sec.get("potential.coeffs", "1.0"))
    if pot_kind == "Constant":
        pot = nl.Potential("Constant", coeffs[:1])
    elif pot_kind == "RadialPolynomial":
        pot = nl.Potential("RadialPolynomial", coeffs)
    else:
        raise ConfigError(f"unsupported potential.kind {pot_kind!r} in config", path=cfg.path)
    kw = {}
    for key in ("gamma", "q", "p", "alpha", "theta"):
        if key in sec:
            kw[key] = float(sec[key])
    try:
        return nl.NonlinearitySpec(kind, potential=pot, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc), path=cfg.path) from exc


def spec_to_config_text(spec):
    lines = ["[nonlinearity]", f"kind = {spec.kind}"]
    for key in ("gamma", "q", "p", "alpha", "theta"):
        val = getattr(spec, key)
        if val:
            lines.append(f"{key} = {val:.17g}")
    lines.append(f"potential.kind = {spec.potential.kind}")
    if spec.potential.coeffs:
        lines.append("potential.coeffs = " + " ".join(f"{c:.17g}" for c in spec.potential.coeffs))
    return "\n".join(lines) + "\n"


def grid_from_config(cfg):
    sec = cfg.sections.get("solver", {})
    n = int(sec.get("n", "513"))
    gval = sec.get("grid", "graded")
    if gval == "uniform":
        return radial.make_grid(n, "uniform")
    if gval == "graded":
        return radial.make_grid(n, "graded")
    if gval.startswith("graded:"):
        a, b = _floats(gval.split(":", 1)[1])
        return radial.make_grid(n, "graded", (a, b))
    raise ConfigError(f"unknown grid {gval!r}", path=cfg.path)


def solver_config_from_config(cfg):
    sec = cfg.sections.get("solver", {})
    return radial.SolverConfig(
        newton_tol=float(sec.get("newton_tol", "1e-10")),
        max_iters=int(sec.get("max_iters", "50")),
        damping=sec.get("damping", "line_search"),
    )


def branch_params_from_config(cfg):
    sec = cfg.sections.get("branch", {})
    M_start = float(sec.get("M_start", "0.25"))
    M_end = float(sec.get("M_end", "25"))
    dM = float(sec.get("dM", "0.25"))
    if M_start > M_end:
        raise ConfigError("M_start exceeds M_end", path=cfg.path)
    if dM <= 0:
        raise ConfigError("dM must be positive", path=cfg.path)
    return M_start, M_end, dM


def counterexample_params_from_config(cfg):
    sec = cfg.sections.get("counterexample", {})
    return {
        "alpha": float(sec.get("alpha", "1.5")),
        "ell_rho": float(sec.get("ell_rho", "1000")),
        "ell_max": float(sec.get("ell_max", "1e6")),
        "grid_points": int(sec.get("grid_points", "400")),
    }


def output_from_config(cfg, override_dir=None):
    sec = cfg.sections.get("output", {})
    out_dir = override_dir or sec.get("dir", "out")
    formats = set(sec.get("formats", "csv,json").replace(",", " ").split())
    bad = formats - {"csv", "json"}
    if bad:
        raise ConfigError(f"unknown output formats {sorted(bad)}", path=cfg.path)
    return out_dir, formats
