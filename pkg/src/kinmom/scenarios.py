"""Scenario configuration, the builtin scenario pack, and the check runner.

A scenario is a small line-oriented text file with sections [field], [grid],
[state], [checks] and optional [tolerances]::

    name = kinetic-angular-commutation
    seed = 1

    [field]
    B = 1
    A = (-B*y/2, B*x/2, 0)
    V = 0

    [grid]
    dims = 48 48 48
    h = 1

    [state]
    sigma = 6
    k = 0.2 0.15 0.1

    [checks]
    names = LL converge
    families = LL-uniformB-symmetric
    spacings = 2 1 0.5

Values in [field] are exact rationals; bare names there (like B above)
define constants usable in later expressions.  Everything else is float.
"""

from __future__ import annotations

import io
import json
import re
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from . import dynamics, fields, tensors, verify
from .operators import (Grid, StateSpecError, expectation, gaussian_packet,
                        hamiltonian_operator, torque_operator)

KNOWN_CHECKS = ("verify-tensors", "ll", "LL", "pipi", "force-forms",
                "ehrenfest-static", "ehrenfest-dynamic", "gauge", "converge",
                "landau")

# residual checks that are rerun on the perturbed state variants
_VARIANT_CHECKS = ("ll", "LL", "pipi", "force-forms", "ehrenfest-static")

DEFAULT_TOLERANCES = {
    "ll": 1e-2,
    "LL": 1e-2,
    "pipi": 1e-2,
    "pipi-exact": 1e-12,
    "force-forms": 1e-2,
    "force-forms-exact": 1e-12,
    "ehrenfest-static": 1e-2,
    "ehrenfest-dynamic": 1e-2,
    "norm-drift": 1e-10,
    "energy-drift": 1e-8,
    "gauge": 1e-2,
    "gauge-shift": 0.05,
    "landau-energy": 0.02,
    "landau-oracle": 1e-8,
}

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED_FIELD_KEYS = ("A", "V", "chi", "q", "hbar", "m", "c")
_SECTION_KEYS = {
    "grid": ("dims", "h", "origin"),
    "state": ("center", "sigma", "k", "vortex"),
    "checks": ("names", "families", "spacings", "dt", "steps"),
}


class ScenarioError(ValueError):
    """Problem in a scenario file; `kind` and `line` are machine-readable."""

    def __init__(self, message, kind="invalid-value", line=None):
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")
        self.kind = kind
        self.line = line


@dataclass
class StateSpec:
    center: tuple = (0.0, 0.0, 0.0)
    sigma: float | None = None          # defaults to 6 h at build time
    wavevector: tuple = (0.0, 0.0, 0.0)
    vortex_m: int = 0

    def build(self, grid):
        sigma = 6.0 * grid.h if self.sigma is None else self.sigma
        return gaussian_packet(grid, self.center, sigma, self.wavevector,
                               self.vortex_m)

    def describe(self):
        return {
            "center": list(self.center),
            "sigma": self.sigma,
            "k": list(self.wavevector),
            "vortex": self.vortex_m,
        }


@dataclass
class Scenario:
    name: str = "scenario"
    seed: int = 0
    cfg: fields.FieldConfig = dc_field(default_factory=fields.make_zero_field)
    chi: fields.Poly3 | None = None
    grid: Grid = dc_field(default_factory=lambda: Grid((48, 48, 48), 1.0))
    state: StateSpec = dc_field(default_factory=StateSpec)
    checks: list = dc_field(default_factory=list)
    families: list = dc_field(default_factory=list)
    spacings: list = dc_field(default_factory=list)
    dt: float | None = None
    steps: int | None = None
    tolerances: dict = dc_field(default_factory=dict)

    def describe(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "field": self.cfg.describe(),
            "chi": None if self.chi is None else str(self.chi),
            "grid": self.grid.describe(),
            "state": self.state.describe(),
            "checks": list(self.checks),
            "families": list(self.families),
            "spacings": list(self.spacings),
            "dt": self.dt,
            "steps": self.steps,
            "tolerances": dict(self.tolerances),
        }


def _parse_floats(value, count, line, what):
    parts = value.split()
    if len(parts) != count:
        raise ScenarioError(f"{what} needs {count} numbers, got {len(parts)}",
                            line=line)
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ScenarioError(f"bad number in {what}: {value!r}", line=line) from None


def parse_scenario(text):
    """Parse scenario text; raises ScenarioError with a line number on any
    syntax problem, unknown or duplicate key, or invariant violation."""
    section = None
    seen = {}
    raw = {"": {}, "field": {}, "grid": {}, "state": {}, "checks": {},
           "tolerances": {}}
    field_order = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"unterminated section header {line!r}",
                                    kind="syntax", line=lineno)
            section = line[1:-1].strip()
            if section not in raw or section == "":
                raise ScenarioError(f"unknown section [{section}]",
                                    kind="unknown-key", line=lineno)
            continue
        if "=" not in line:
            raise ScenarioError(f"expected key = value, got {line!r}",
                                kind="syntax", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not _NAME_RE.match(key):
            raise ScenarioError(f"bad key name {key!r}", kind="syntax",
                                line=lineno)
        sec = section or ""
        if (sec, key) in seen:
            raise ScenarioError(
                f"duplicate key {key!r} (lines {seen[(sec, key)]} and {lineno})",
                kind="duplicate-key", line=lineno)
        seen[(sec, key)] = lineno
        if sec == "":
            if key not in ("name", "seed"):
                raise ScenarioError(
                    f"unknown top-level key {key!r} (expected name or seed)",
                    kind="unknown-key", line=lineno)
        elif sec in _SECTION_KEYS and key not in _SECTION_KEYS[sec]:
            raise ScenarioError(
                f"unknown key {key!r} in [{sec}]", kind="unknown-key", line=lineno)
        raw[sec][key] = (value, lineno)
        if sec == "field":
            field_order.append(key)

    scenario = Scenario()
    if "name" in raw[""]:
        scenario.name = raw[""]["name"][0]
    if "seed" in raw[""]:
        value, lineno = raw[""]["seed"]
        try:
            scenario.seed = int(value)
        except ValueError:
            raise ScenarioError(f"seed must be an integer, got {value!r}",
                                line=lineno) from None

    # [field]: constants first-come, then expressions with those constants
    constants = {}
    consts_kw = {}
    a_vec, v_pol, chi_pol = None, None, None
    for key in field_order:
        value, lineno = raw["field"][key]
        try:
            if key == "A":
                a_vec = fields.parse_vector_field(value, constants, line=lineno)
            elif key == "V":
                v_pol = fields.parse_scalar_field(value, constants, line=lineno)
            elif key == "chi":
                chi_pol = fields.parse_scalar_field(value, constants, line=lineno)
            elif key in ("q", "hbar", "m", "c"):
                consts_kw[key] = Fraction(value)
            else:
                constants[key] = Fraction(value)
        except fields.FieldExprError as exc:
            raise ScenarioError(str(exc), kind="syntax", line=lineno) from None
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"bad rational for {key!r}: {exc}",
                                line=lineno) from None
    try:
        scenario.cfg = fields.FieldConfig(
            A=a_vec if a_vec is not None else fields.ZERO_VEC,
            V=v_pol if v_pol is not None else fields.ZERO, **consts_kw)
    except ValueError as exc:
        raise ScenarioError(str(exc), kind="invariant") from None
    scenario.chi = chi_pol

    grid_kw = {}
    if "dims" in raw["grid"]:
        value, lineno = raw["grid"]["dims"]
        try:
            grid_kw["shape"] = tuple(int(p) for p in value.split())
        except ValueError:
            raise ScenarioError(f"dims must be integers, got {value!r}",
                                line=lineno) from None
    if "h" in raw["grid"]:
        value, lineno = raw["grid"]["h"]
        grid_kw["h"] = _parse_floats(value, 1, lineno, "h")[0]
    if "origin" in raw["grid"]:
        value, lineno = raw["grid"]["origin"]
        grid_kw["origin"] = _parse_floats(value, 3, lineno, "origin")
    try:
        scenario.grid = Grid(grid_kw.get("shape", (48, 48, 48)),
                             grid_kw.get("h", 1.0),
                             grid_kw.get("origin", (0.0, 0.0, 0.0)))
    except ValueError as exc:
        raise ScenarioError(str(exc), kind="invariant") from None

    state = StateSpec()
    if "center" in raw["state"]:
        value, lineno = raw["state"]["center"]
        state.center = _parse_floats(value, 3, lineno, "center")
    if "sigma" in raw["state"]:
        value, lineno = raw["state"]["sigma"]
        state.sigma = _parse_floats(value, 1, lineno, "sigma")[0]
    if "k" in raw["state"]:
        value, lineno = raw["state"]["k"]
        state.wavevector = _parse_floats(value, 3, lineno, "k")
    if "vortex" in raw["state"]:
        value, lineno = raw["state"]["vortex"]
        try:
            state.vortex_m = int(value)
        except ValueError:
            raise ScenarioError(f"vortex must be an integer, got {value!r}",
                                line=lineno) from None
    scenario.state = state

    if "names" in raw["checks"]:
        value, lineno = raw["checks"]["names"]
        scenario.checks = value.split()
        for check in scenario.checks:
            if check not in KNOWN_CHECKS:
                raise ScenarioError(
                    f"unknown check {check!r}; known: {', '.join(KNOWN_CHECKS)}",
                    kind="unknown-key", line=lineno)
    if "families" in raw["checks"]:
        value, lineno = raw["checks"]["families"]
        scenario.families = value.split()
        for fam in scenario.families:
            try:
                verify.residual_family(fam)
            except ValueError as exc:
                raise ScenarioError(str(exc), kind="unknown-key",
                                    line=lineno) from None
    if "spacings" in raw["checks"]:
        value, lineno = raw["checks"]["spacings"]
        scenario.spacings = [
            float(p) for p in value.split()]
    if "dt" in raw["checks"]:
        value, lineno = raw["checks"]["dt"]
        scenario.dt = _parse_floats(value, 1, lineno, "dt")[0]
    if "steps" in raw["checks"]:
        value, lineno = raw["checks"]["steps"]
        try:
            scenario.steps = int(value)
        except ValueError:
            raise ScenarioError(f"steps must be an integer, got {value!r}",
                                line=lineno) from None

    for key, (value, lineno) in raw["tolerances"].items():
        if key not in DEFAULT_TOLERANCES:
            raise ScenarioError(f"unknown tolerance key {key!r}",
                                kind="unknown-key", line=lineno)
        try:
            scenario.tolerances[key] = float(value)
        except ValueError:
            raise ScenarioError(f"tolerance {key!r} must be a number",
                                line=lineno) from None

    _validate_state(scenario)
    return scenario


def _validate_state(scenario):
    try:
        scenario.state.build(scenario.grid)
    except StateSpecError as exc:
        raise ScenarioError(f"state does not fit the grid: {exc}",
                            kind="invariant") from None


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

@dataclass
class CheckOutcome:
    check: str
    name: str
    kind: str
    passed: bool
    payload: dict

    def as_dict(self):
        out = {"check": self.check, "name": self.name, "kind": self.kind,
               "passed": self.passed}
        out.update(self.payload)
        return out


@dataclass
class RunReport:
    scenario: dict
    results: list
    wall_time: float
    traces: dict = dc_field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "results": [r.as_dict() for r in self.results],
            "passed": self.passed,
            "wall_time": self.wall_time,
        }


def _tolerance(scenario, key, scale):
    return scenario.tolerances.get(key, DEFAULT_TOLERANCES[key]) * scale


def _state_variants(scenario):
    """The deterministic state family: base Gaussian, displaced Gaussian,
    and vortex Gaussian.  Varied states guard identity checks against
    accidental symmetry cancellations."""
    grid = scenario.grid
    spec = scenario.state
    sigma = 6.0 * grid.h if spec.sigma is None else spec.sigma
    variants = {"gauss": spec.build(grid)}
    center = tuple(spec.center[a] + (2.0 * grid.h, grid.h, 0.0)[a]
                   if a < grid.ndim else spec.center[a] for a in range(3))
    variants["displaced"] = gaussian_packet(
        grid, center, max(sigma * 5.0 / 6.0, 3.0 * grid.h), spec.wavevector, 0)
    if grid.ndim >= 2:
        variants["vortex"] = gaussian_packet(
            grid, spec.center, sigma, spec.wavevector, vortex_m=1)
    return variants


def _residual_outcome(check, variant, report):
    return CheckOutcome(
        check=check,
        name=f"{report.name}[{variant}]",
        kind="residual",
        passed=report.passed,
        payload=report.as_dict(),
    )


def run(scenario, tolerance_scale=1.0, seed=None, collect_traces=False):
    """Execute every check named by the scenario; deterministic given seed."""
    if not scenario.checks:
        raise ScenarioError("no checks requested", kind="invariant")
    t0 = time.perf_counter()
    seed = scenario.seed if seed is None else int(seed)
    grid, cfg = scenario.grid, scenario.cfg
    scale = float(tolerance_scale)
    results = []
    traces = {}

    variants = None
    if any(c in _VARIANT_CHECKS for c in scenario.checks):
        try:
            variants = _state_variants(scenario)
        except StateSpecError as exc:
            raise ScenarioError(f"state variants do not fit the grid: {exc}",
                                kind="invariant") from None

    for check in scenario.checks:
        if check == "verify-tensors":
            for rep in tensors.run_full_suite(samples=100, seed=seed):
                results.append(CheckOutcome(check, rep.name, "identity",
                                            rep.passed, rep.as_dict()))
        elif check == "ll":
            for variant, psi in variants.items():
                tol = _tolerance(scenario, "ll", scale)
                rep = verify.verify_ll_commutation(
                    grid, psi, float(cfg.hbar), tolerance=tol)
                results.append(_residual_outcome(check, variant, rep))
        elif check == "LL":
            for variant, psi in variants.items():
                tol = _tolerance(scenario, "LL", scale)
                rep = verify.verify_LL_commutation(grid, cfg, psi, tolerance=tol)
                results.append(_residual_outcome(check, variant, rep))
        elif check == "pipi":
            exact = all(a.is_zero for a in cfg.A)
            key = "pipi-exact" if exact else "pipi"
            for variant, psi in variants.items():
                tol = _tolerance(scenario, key, scale)
                rep = verify.verify_pipi_commutation(grid, cfg, psi, tolerance=tol)
                results.append(_residual_outcome(check, variant, rep))
        elif check == "force-forms":
            tol = _tolerance(scenario, "force-forms", scale)
            exact_tol = _tolerance(scenario, "force-forms-exact", scale)
            for variant, psi in variants.items():
                for rep in verify.verify_force_forms(
                        grid, cfg, psi, tolerance=tol, exact_tolerance=exact_tol):
                    results.append(_residual_outcome(check, variant, rep))
        elif check == "ehrenfest-static":
            tol = _tolerance(scenario, "ehrenfest-static", scale)
            for variant, psi in variants.items():
                rep = verify.verify_angular_ehrenfest_static(
                    grid, cfg, psi, tolerance=tol)
                results.append(_residual_outcome(check, variant, rep))
        elif check == "ehrenfest-dynamic":
            results.extend(_run_dynamic(scenario, scale, traces))
        elif check == "gauge":
            results.extend(_run_gauge(scenario, scale))
        elif check == "converge":
            if not scenario.families or not scenario.spacings:
                raise ScenarioError(
                    "the converge check needs families and spacings",
                    kind="invariant")
            for fam in scenario.families:
                rep = verify.convergence_study(fam, scenario.spacings)
                results.append(CheckOutcome(check, fam, "convergence",
                                            rep.passed, rep.as_dict()))
        elif check == "landau":
            results.extend(_run_landau(scenario, scale))
        else:  # unreachable while KNOWN_CHECKS is authoritative
            raise ScenarioError(f"unknown check {check!r}", kind="invariant")

    report = RunReport(scenario.describe(), results,
                       time.perf_counter() - t0)
    if collect_traces:
        report.traces = traces
    return report


def _default_dt(scenario):
    cfg, grid = scenario.cfg, scenario.grid
    dt = grid.h ** 2 * float(cfg.m) / float(cfg.hbar)
    if cfg.uniform_H and not cfg.Hmag[2].is_zero:
        bz = abs(float(cfg.Hmag[2](0, 0, 0)))
        omega = float(cfg.q) * bz / (float(cfg.m) * float(cfg.c))
        if omega > 0:
            dt = min(dt, 0.05 / omega)
    return dt


def _run_dynamic(scenario, scale, traces):
    if scenario.steps is None:
        raise ScenarioError(
            "the ehrenfest-dynamic check needs steps (and optionally dt)",
            kind="invariant")
    dt = scenario.dt if scenario.dt is not None else _default_dt(scenario)
    psi0 = scenario.state.build(scenario.grid)
    tol = _tolerance(scenario, "ehrenfest-dynamic", scale)
    report, trace = dynamics.verify_angular_ehrenfest_dynamic(
        scenario.cfg, scenario.grid, psi0, dt, scenario.steps,
        tolerance=tol, return_trace=True)
    traces["ehrenfest-dynamic"] = trace
    outcomes = [_residual_outcome("ehrenfest-dynamic", "gauss", report)]
    norm_tol = _tolerance(scenario, "norm-drift", scale)
    energy_tol = _tolerance(scenario, "energy-drift", scale)
    outcomes.append(CheckOutcome(
        "ehrenfest-dynamic", "norm-drift", "residual",
        report.details["max_norm_drift"] <= norm_tol,
        {"residual": report.details["max_norm_drift"], "tolerance": norm_tol}))
    outcomes.append(CheckOutcome(
        "ehrenfest-dynamic", "energy-drift", "residual",
        report.details["energy_drift"] <= energy_tol,
        {"residual": report.details["energy_drift"], "tolerance": energy_tol}))
    return outcomes


def _run_gauge(scenario, scale):
    if scenario.chi is None:
        raise ScenarioError("the gauge check needs chi in [field]",
                            kind="invariant")
    grid, cfg = scenario.grid, scenario.cfg
    tol = _tolerance(scenario, "gauge", scale)
    shift_tol = _tolerance(scenario, "gauge-shift", scale)
    outcomes = []
    psi = scenario.state.build(grid)
    rep = verify.verify_gauge_expectations(
        grid, cfg, scenario.chi, psi, tolerance=tol, shift_tolerance=shift_tol)
    for sub in rep.reports():
        outcomes.append(_residual_outcome("gauge", "centered", sub))
    # displaced probe: nonzero predicted canonical shift, 8h off-center
    center = tuple(scenario.state.center[a] + (8.0 * grid.h if a == 0 else 0.0)
                   for a in range(3))
    try:
        probe = gaussian_packet(grid, center, 4.0 * grid.h,
                                scenario.state.wavevector, 0)
    except StateSpecError as exc:
        raise ScenarioError(f"gauge probe does not fit the grid: {exc}",
                            kind="invariant") from None
    rep2 = verify.verify_gauge_expectations(
        grid, cfg, scenario.chi, probe, tolerance=tol, shift_tolerance=shift_tol)
    for sub in rep2.reports():
        outcomes.append(_residual_outcome("gauge", "displaced", sub))
    return outcomes


def _run_landau(scenario, scale):
    grid, cfg = scenario.grid, scenario.cfg
    if grid.ndim != 2:
        raise ScenarioError("the landau check needs a 2D grid", kind="invariant")
    if not cfg.uniform_H or cfg.Hmag[2].is_zero \
            or not (cfg.Hmag[0].is_zero and cfg.Hmag[1].is_zero):
        raise ScenarioError("the landau check needs a uniform B along z",
                            kind="invariant")
    hbar, q, m, c = (float(cfg.hbar), float(cfg.q), float(cfg.m), float(cfg.c))
    bz = abs(float(cfg.Hmag[2](0, 0, 0)))
    magnetic_length = (hbar * c / (q * bz)) ** 0.5
    box = min(grid.shape) * grid.h
    if magnetic_length < 6.0 * grid.h or magnetic_length > box / 8.0:
        raise ScenarioError(
            f"magnetic length {magnetic_length:g} must lie in [6h, box/8] "
            f"= [{6 * grid.h:g}, {box / 8:g}]", kind="invariant")
    omega = q * bz / (m * c)
    target = hbar * omega / 2.0
    energy_tol = _tolerance(scenario, "landau-energy", scale)
    oracle_tol = _tolerance(scenario, "landau-oracle", scale)

    energy, _ = dynamics.ground_state(hamiltonian_operator(grid, cfg))
    rel = abs(energy - target) / target
    outcomes = [CheckOutcome(
        "landau", "ground-energy", "eigenvalue", rel <= energy_tol,
        {"energy": energy, "target": target, "residual": rel,
         "tolerance": energy_tol, "magnetic_length": magnetic_length,
         "cyclotron_frequency": omega})]

    # independent oracle: dense eigensolver on a 32^2 grid, same field
    small = Grid((32, 32), grid.h, grid.origin)
    ham32 = hamiltonian_operator(small, cfg)
    e_iter, _ = dynamics.ground_state(ham32)
    e_dense, _ = dynamics.dense_ground_state(ham32)
    agree = abs(e_iter - e_dense) / max(abs(e_dense), 1e-300)
    outcomes.append(CheckOutcome(
        "landau", "dense-oracle-agreement", "eigenvalue", agree <= oracle_tol,
        {"iterative": e_iter, "dense": e_dense, "residual": agree,
         "tolerance": oracle_tol}))
    return outcomes


def central_torque_expectation(grid, cfg, psi):
    """max_i |<T_i>|; exactly zero for central electrostatic fields."""
    return max(abs(expectation(torque_operator(grid, cfg, i), psi))
               for i in (1, 2, 3))


# ---------------------------------------------------------------------------
# builtin scenario pack
# ---------------------------------------------------------------------------

BUILTIN_SCENARIO_TEXTS = {
    "tensor-identities": """
        name = tensor-identities
        [checks]
        names = verify-tensors
    """,
    "canonical-angular-commutation": """
        name = canonical-angular-commutation
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = ll converge
        families = ll-free
        spacings = 2 1 0.5
    """,
    "kinetic-angular-commutation": """
        name = kinetic-angular-commutation
        [field]
        B = 1
        A = (-B*y/2, B*x/2, 0)
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = LL converge
        families = LL-uniformB-symmetric
        spacings = 2 1 0.5
    """,
    "kinetic-angular-commutation-landau": """
        name = kinetic-angular-commutation-landau
        [field]
        B = 1
        A = (-B*y, 0, 0)
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = LL
    """,
    "momentum-commutation-zero": """
        name = momentum-commutation-zero
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = pipi
    """,
    "momentum-commutation-uniformB": """
        name = momentum-commutation-uniformB
        [field]
        B = 1
        A = (-B*y/2, B*x/2, 0)
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = pipi converge
        families = pipi-uniformB
        spacings = 2 1 0.5
    """,
    "force-forms-uniformB": """
        name = force-forms-uniformB
        [field]
        B = 1
        A = (-B*y/2, B*x/2, 0)
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = force-forms converge
        families = force-definition-vs-anticommutator
        spacings = 1 0.5 0.25
    """,
    "force-forms-nonuniform": """
        name = force-forms-nonuniform
        [field]
        A = (0, x^2, 0)
        [grid]
        dims = 96 96
        h = 1
        [state]
        sigma = 12
        k = 0.2 0.15 0
        [checks]
        names = force-forms converge
        families = force-nonuniform
        spacings = 1 0.5 0.25
    """,
    "torque-balance-static": """
        name = torque-balance-static
        [field]
        B = 1
        A = (-B*y/2, B*x/2, 0)
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        k = 0.2 0.15 0.1
        [checks]
        names = ehrenfest-static converge
        families = ehrenfest-static-uniformB
        spacings = 1 0.5 0.25
    """,
    "torque-central-potential": """
        name = torque-central-potential
        [field]
        V = (x^2 + y^2 + z^2) / 2
        [grid]
        dims = 32 32 32
        h = 1
        [state]
        sigma = 3
        [checks]
        names = ehrenfest-static
    """,
    "torque-balance-dynamic": """
        name = torque-balance-dynamic
        [field]
        B = 3/160
        A = (-B*y/2, B*x/2, 0)
        [grid]
        dims = 128 128
        h = 1
        [state]
        sigma = 8
        k = 0.15 0 0
        [checks]
        names = ehrenfest-dynamic
        dt = 1
        steps = 168
    """,
    "gauge-shift": """
        name = gauge-shift
        [field]
        B = 1/32
        A = (-B*y, 0, 0)
        chi = B*x*y/2
        [grid]
        dims = 48 48 48
        h = 1
        [state]
        sigma = 6
        [checks]
        names = gauge converge
        families = gauge-L-invariance gauge-H-invariance
        spacings = 2 1 0.5
    """,
    "landau-ground-state": """
        name = landau-ground-state
        [field]
        B = 1/100
        A = (-B*y/2, B*x/2, 0)
        [grid]
        dims = 96 96
        h = 1
        [checks]
        names = landau
    """,
}


def builtin_scenario(name):
    try:
        text = BUILTIN_SCENARIO_TEXTS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown builtin scenario {name!r}; see --list-scenarios",
            kind="unknown-key") from None
    return parse_scenario(text)


def builtin_names():
    return list(BUILTIN_SCENARIO_TEXTS)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def emit_report(report, fmt="json"):
    """Serialize a RunReport: JSON (stable key order) or CSV summary rows."""
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2, sort_keys=True,
                          default=_json_default) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("name,residual,tolerance,order,pass\n")
        for outcome in report.results:
            payload = outcome.payload
            residual = payload.get("residual", "")
            if outcome.kind == "identity":
                residual = len(payload.get("failures", []))
            tolerance = payload.get("tolerance", "")
            order = payload.get("fitted_order", "")
            if order is None:
                order = "exact"
            buf.write(f"{outcome.name},{residual},{tolerance},{order},"
                      f"{outcome.passed}\n")
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}; expected json or csv")


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"cannot serialize {type(obj).__name__}")
