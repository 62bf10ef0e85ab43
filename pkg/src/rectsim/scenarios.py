"""Scenario files: TOML with nested sections, bundled defaults, overrides.

A scenario file looks like:

    [scenario]
    name = "voltage_comparison"
    horizon_s = 5.0
    dt_s = 1e-6
    log_period_s = 2e-5
    mode = "cascade"

    [plant]          # omitted keys keep the nominal bench values
    v_dc_ref_V = 520.0

    [controller]
    type = "proposed"            # proposed | pi_pr | adaptive_sta | itsmc
    estimator = "adaptive"       # adaptive | eso
    p_v_base_W = 5000.0

    [controller.voltage_gains]   # optional per-gain overrides
    gamma = 0.5

    [load]
    kind = "sinusoidal-power"
    offset_W = 500.0
    amplitude_W = 200.0
    frequency_hz = 5.0
    declared_delta_W = 750.0
    declared_eps_W_per_s = 6600.0

    [references]
    v_dc = [[0.0, 520.0]]

    [init]
    v_dc_V = 512.0

Dotted-path overrides (`section.key=value`) are applied to the parsed tree
before validation.
"""

import importlib.resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .plant import PlantParams, LoadProfile, GridProfile
from .voltctl import VoltageGains
from .currctl import CurrentGains
from .baselines import BaselineGains
from .simcore import Scenario, ScenarioError

_PLANT_KEYS = {"l_H": "l", "r_ohm": "r", "c_F": "c", "f_grid_hz": "f_grid",
               "v_ll_rms_V": "v_ll_rms", "v_dc_ref_V": "v_dc_ref"}
_LOAD_KEYS = {"kind": "kind", "segments": "segments", "amplitude_W": "amplitude",
              "frequency_hz": "frequency", "offset_W": "offset",
              "resistance_ohm": "resistance", "declared_delta_W": "declared_delta",
              "declared_eps_W_per_s": "declared_eps"}
_GRID_KEYS = {"freq_breakpoints": "freq_breakpoints",
              "amplitude_breakpoints": "amplitude_breakpoints",
              "l_factor": "l_factor", "r_factor": "r_factor"}
_INIT_KEYS = {"v_dc_V": "init_v_dc", "i_d_A": "init_i_d", "i_q_A": "init_i_q",
              "ztilde1": "init_ztilde1", "rho_hat_W": "init_rho_hat"}


def list_bundled() -> list:
    """Names of the scenario files shipped with the package."""
    root = importlib.resources.files("rectsim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def bundled_path(name: str) -> Path:
    root = importlib.resources.files("rectsim") / "scenarios"
    return Path(str(root / f"{name}.toml"))


def parse_override(text: str):
    """Parse one `dotted.path=value` override into (keys, value)."""
    if "=" not in text:
        raise ScenarioError([f"override {text!r}: expected key=value"])
    key, raw = text.split("=", 1)
    keys = key.strip().split(".")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return keys, value


def apply_overrides(tree: dict, overrides) -> dict:
    problems = []
    for text in overrides or ():
        keys, value = parse_override(text)
        node = tree
        for k in keys[:-1]:
            nxt = node.get(k)
            if nxt is None:
                nxt = node[k] = {}
            elif not isinstance(nxt, dict):
                problems.append(f"override {text!r}: {k} is not a section")
                break
            node = nxt
        else:
            node[keys[-1]] = value
    if problems:
        raise ScenarioError(problems)
    return tree


def _pick(table: dict, mapping: dict, label: str, problems: list) -> dict:
    out = {}
    for key, value in table.items():
        if key not in mapping:
            problems.append(f"{label}.{key}: unknown field")
            continue
        out[mapping[key]] = value
    return out


def _gains(table: dict, cls, label: str, problems: list):
    known = set(cls.__dataclass_fields__)
    kwargs = {}
    for key, value in table.items():
        if key not in known:
            problems.append(f"{label}.{key}: unknown field")
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{label}: {exc}")
        return cls()


def from_dict(tree: dict) -> Scenario:
    """Build and validate a Scenario from the parsed TOML tree."""
    problems = []
    known_sections = {"scenario", "plant", "grid", "load", "references",
                      "controller", "init"}
    for section in tree:
        if section not in known_sections:
            problems.append(f"{section}: unknown section")

    sc_tab = tree.get("scenario", {})
    ctl_tab = dict(tree.get("controller", {}))
    vg = _gains(ctl_tab.pop("voltage_gains", {}), VoltageGains,
                "controller.voltage_gains", problems)
    cg = _gains(ctl_tab.pop("current_gains", {}), CurrentGains,
                "controller.current_gains", problems)
    bg = _gains(ctl_tab.pop("baseline_gains", {}), BaselineGains,
                "controller.baseline_gains", problems)

    try:
        plant = PlantParams(**_pick(tree.get("plant", {}), _PLANT_KEYS,
                                    "plant", problems))
    except ValueError as exc:
        problems.append(f"plant: {exc}")
        plant = PlantParams()

    load_kwargs = _pick(tree.get("load", {}), _LOAD_KEYS, "load", problems)
    load_kwargs.setdefault("horizon", float(sc_tab.get("horizon_s", 0.1)))
    load_kwargs["segments"] = [tuple(row) for row in
                               load_kwargs.get("segments", [(0.0, 0.0)])]
    try:
        load = LoadProfile(**load_kwargs)
    except ValueError as exc:
        problems.append(f"load: {exc}")
        load = LoadProfile(horizon=load_kwargs.get("horizon", 0.1))

    grid_kwargs = _pick(tree.get("grid", {}), _GRID_KEYS, "grid", problems)
    for key in ("freq_breakpoints", "amplitude_breakpoints"):
        if key in grid_kwargs:
            grid_kwargs[key] = [tuple(row) for row in grid_kwargs[key]]
    grid_kwargs.setdefault("freq_breakpoints", [(0.0, plant.f_grid)])
    grid_kwargs.setdefault("amplitude_breakpoints", [(0.0, plant.v_ll_rms)])
    try:
        grid = GridProfile(**grid_kwargs)
    except ValueError as exc:
        problems.append(f"grid: {exc}")
        grid = GridProfile()

    refs = tree.get("references", {})
    vref = [tuple(row) for row in refs.get("v_dc", [])]
    iref = [tuple(row) for row in refs.get("current", [])]
    if sc_tab.get("mode", "cascade") == "cascade" and not vref:
        vref = [(0.0, plant.v_dc_ref)]

    init = _pick(tree.get("init", {}), _INIT_KEYS, "init", problems)

    scenario = Scenario(
        name=str(sc_tab.get("name", "unnamed")),
        horizon=float(sc_tab.get("horizon_s", 0.1)),
        dt=float(sc_tab.get("dt_s", 1e-6)),
        log_period=float(sc_tab.get("log_period_s", sc_tab.get("dt_s", 1e-6))),
        mode=str(sc_tab.get("mode", "cascade")),
        controller=str(ctl_tab.pop("type", "proposed")),
        estimator=str(ctl_tab.pop("estimator", "adaptive")),
        current_ref_interpretation=str(
            ctl_tab.pop("current_ref_interpretation", "power")),
        p_v_base=float(ctl_tab.pop("p_v_base_W", 5000.0)),
        eso_bandwidth=float(ctl_tab.pop("eso_bandwidth_rad_s", 500.0)),
        plant=plant, grid=grid, load=load,
        voltage_gains=vg, current_gains=cg, baseline_gains=bg,
        vref_schedule=vref, iref_schedule=iref,
        control_period=(float(sc_tab["control_period_s"])
                        if "control_period_s" in sc_tab else None),
        tol_s=float(sc_tab.get("tol_s", 1e-4)),
        band_frac=float(sc_tab.get("band_frac", 0.01)),
        steady_frac=float(sc_tab.get("steady_frac", 0.2)),
        **init,
    )
    for key in ctl_tab:
        problems.append(f"controller.{key}: unknown field")
    if problems:
        raise ScenarioError(problems)
    scenario.validate()
    return scenario


def load_scenario(name_or_path, overrides=None) -> Scenario:
    """Load a bundled scenario by name or any TOML file by path."""
    path = Path(name_or_path)
    if not path.suffix:
        if path.name not in list_bundled():
            raise ScenarioError(
                [f"scenario: no bundled scenario named {path.name!r}; "
                 f"available: {', '.join(list_bundled())}"])
        path = bundled_path(path.name)
    if not path.exists():
        raise ScenarioError([f"scenario: file not found: {path}"])
    try:
        tree = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"scenario: TOML parse error: {exc}"]) from exc
    tree = apply_overrides(tree, overrides)
    return from_dict(tree)
