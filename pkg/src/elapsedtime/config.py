"""Sectioned key=value scenario files and the built-in presets.

Format::

    # comment
    [section]
    key = value

Validation collects every problem (unknown section or key, missing key,
bad number, unknown registry id, CFL-violating explicit dt) and reports
them together, each with its section and line number.
"""

import inspect
import math
from dataclasses import dataclass, field

from .errors import ElapsedTimeError
from .hazards import PHI_REGISTRY, SIGMA_REGISTRY
from .profiles import REGISTRY as PROFILE_REGISTRY

MODEL_TYPES = ("itm", "ddm", "linear")
HAZARD_KINDS = ("step-fixed", "step-variable", "unbounded-quadratic")
KERNEL_KINDS = ("exponential", "gaussian")
KERNEL_MODES = ("auto", "convolution", "ode", "exact-limit")
WEIGHT_RULES = ("trapezoid", "uniform-half")
BRANCH_POLICIES = ("nearest-previous", "lowest", "highest", "fixed-index")

# section -> {key: converter}; dotted keys (phi.k, sigma_fn.base) and
# initial-profile parameters are checked separately against the registries
SCHEMA = {
    "scenario": {"name": str},
    "model": {"type": str},
    "hazard": {"kind": str, "phi": str, "sigma": float, "sigma_fn": str,
               "coupling": float, "cap": float, "a": float, "b": float},
    "kernel": {"kind": str, "lambda": float, "d": float, "J": float,
               "mode": str, "weights": str},
    "initial": {"profile": str},
    "grid": {"ds": float, "T": float, "dt": float, "s_max": float,
             "dt_factor": float},
    "branch": {"policy": str, "index": int},
    "flux": {"value": float},
    "output": {"flux": str, "density": str, "snapshots": str},
    "solver": {"tol": float},
}
REQUIRED = {"model": ("type",), "hazard": ("kind",), "initial": ("profile",),
            "grid": ("ds", "T")}


class ConfigError(ElapsedTimeError):
    """All problems found in one config text."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario config:\n" + "\n".join(
            f"  {p}" for p in self.problems))


@dataclass
class Problem:
    section: str
    line: int
    message: str

    def __str__(self):
        where = f"[{self.section}]" if self.section else "<top>"
        return f"{where} line {self.line}: {self.message}" if self.line else \
            f"{where}: {self.message}"


@dataclass
class ScenarioConfig:
    name: str
    model: str
    hazard: dict
    initial: dict
    grid: dict
    kernel: dict = None
    branch: dict = field(default_factory=lambda: {"policy": "nearest-previous"})
    flux: dict = None
    outputs: dict = field(default_factory=dict)
    tol: float = 1e-12
    text: str = ""
    lines: dict = field(default_factory=dict, repr=False)

    @property
    def snapshot_times(self):
        return tuple(self.outputs.get("snapshots", ()))


def _number(conv, raw):
    v = conv(raw)
    if conv is float and not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _factory_params(factory):
    return {k: p.default for k, p in inspect.signature(factory).parameters.items()}


def _tokenize(text):
    """Yield (section, key, value, line) with syntax problems as Problem."""
    section = ""
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                yield Problem(section, i, f"malformed section header {raw.strip()!r}")
                continue
            section = line[1:-1].strip()
            yield ("section", section, None, i)
            continue
        if "=" not in line:
            yield Problem(section, i, f"expected key = value, got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        yield (section, key, value, i)


def parse_config(text, name=None) -> ScenarioConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    problems = []
    raw = {}
    lines = {}
    seen_sections = {}
    for item in _tokenize(text):
        if isinstance(item, Problem):
            problems.append(item)
            continue
        section, key, value, ln = item
        if section == "section":
            if key not in SCHEMA:
                problems.append(Problem(key, ln, f"unknown section [{key}]"))
            elif key in seen_sections:
                problems.append(Problem(key, ln, f"section repeated (first at line {seen_sections[key]})"))
            seen_sections.setdefault(key, ln)
            continue
        if section == "":
            problems.append(Problem("", ln, f"key {key!r} outside any section"))
            continue
        if section not in SCHEMA:
            continue
        if key in raw.setdefault(section, {}):
            problems.append(Problem(section, ln, f"duplicate key {key!r}"))
            continue
        raw[section][key] = value
        lines[(section, key)] = ln

    for sec, keys in REQUIRED.items():
        for k in keys:
            if k not in raw.get(sec, {}):
                problems.append(Problem(sec, seen_sections.get(sec, 0),
                                        f"missing required key {k!r}"))

    def line(sec, key):
        return lines.get((sec, key), seen_sections.get(sec, 0))

    conv = {}
    for sec, kv in raw.items():
        out = conv.setdefault(sec, {})
        for key, value in kv.items():
            schema = SCHEMA[sec]
            if key in schema:
                try:
                    out[key] = _number(schema[key], value) if schema[key] is not str else value
                except ValueError:
                    problems.append(Problem(sec, line(sec, key),
                                            f"{key} = {value!r} is not a valid {schema[key].__name__}"))
            elif sec == "hazard" and "." in key:
                out[key] = value            # checked below against the registries
            elif sec == "initial":
                out[key] = value            # checked against the profile factory
            elif sec == "output" and key == "snapshots":
                out[key] = value
            else:
                problems.append(Problem(sec, line(sec, key), f"unknown key {key!r}"))

    model = conv.get("model", {}).get("type")
    if model is not None and model not in MODEL_TYPES:
        problems.append(Problem("model", line("model", "type"),
                                f"unknown model type {model!r}; choose from {MODEL_TYPES}"))
    hz = conv.get("hazard", {})
    _check_hazard(hz, problems, line)
    init = conv.get("initial", {})
    _check_initial(init, problems, line)
    kernel = conv.get("kernel")
    if model == "ddm" and kernel is None:
        problems.append(Problem("kernel", 0, "a ddm scenario needs a [kernel] section"))
    if kernel is not None:
        _check_kernel(kernel, problems, line, model)
    if model == "linear" and "value" not in conv.get("flux", {}):
        problems.append(Problem("flux", seen_sections.get("flux", 0),
                                "a linear scenario needs [flux] value = <prescribed N>"))
    br = conv.get("branch", {"policy": "nearest-previous"})
    br.setdefault("policy", "nearest-previous")
    if br["policy"] not in BRANCH_POLICIES:
        problems.append(Problem("branch", line("branch", "policy"),
                                f"unknown branch policy {br['policy']!r}"))
    elif br["policy"] == "fixed-index" and "index" not in br:
        problems.append(Problem("branch", line("branch", "policy"),
                                "fixed-index needs an index (1-based)"))
    for key in ("ds", "T", "dt", "s_max", "dt_factor"):
        v = conv.get("grid", {}).get(key)
        if v is not None and v <= 0:
            problems.append(Problem("grid", line("grid", key), f"{key} must be positive"))
    out = conv.get("output", {})
    if "snapshots" in out:
        try:
            out["snapshots"] = tuple(float(x) for x in out["snapshots"].split(",") if x.strip())
        except ValueError:
            problems.append(Problem("output", line("output", "snapshots"),
                                    "snapshots must be a comma-separated list of times"))

    if problems:
        raise ConfigError(problems)

    cfg = ScenarioConfig(
        name=name or conv.get("scenario", {}).get("name", "scenario"),
        model=model, hazard=hz, initial=init, grid=conv["grid"], kernel=kernel,
        branch=br, flux=conv.get("flux"), outputs=out,
        tol=conv.get("solver", {}).get("tol", 1e-12), text=text, lines=lines)

    # CFL feasibility of an explicit dt needs the built objects
    from .scenarios import check_time_step
    cfl_problem = check_time_step(cfg)
    if cfl_problem:
        raise ConfigError([Problem("grid", line("grid", "dt"), cfl_problem)])
    return cfg


def _check_hazard(hz, problems, line):
    kind = hz.get("kind")
    if kind is None:
        return
    if kind not in HAZARD_KINDS:
        problems.append(Problem("hazard", line("hazard", "kind"),
                                f"unknown hazard kind {kind!r}; choose from {HAZARD_KINDS}"))
        return
    needed = {"step-fixed": ("phi", "sigma"), "step-variable": ("sigma_fn",),
              "unbounded-quadratic": ()}[kind]
    for k in needed:
        if k not in hz:
            problems.append(Problem("hazard", line("hazard", "kind"),
                                    f"{kind} hazard needs {k!r}"))
    registries = {"phi": PHI_REGISTRY, "sigma_fn": SIGMA_REGISTRY}
    for k, reg in registries.items():
        if k in hz and hz[k] not in reg:
            problems.append(Problem("hazard", line("hazard", k),
                                    f"unknown {k} id {hz[k]!r}; known: {sorted(reg)}"))
    for key in [k for k in hz if "." in k]:
        head, param = key.split(".", 1)
        reg = registries.get(head)
        if reg is None or hz.get(head) not in reg:
            problems.append(Problem("hazard", line("hazard", key), f"unknown key {key!r}"))
            continue
        if param not in _factory_params(reg[hz[head]]):
            problems.append(Problem("hazard", line("hazard", key),
                                    f"{hz[head]} has no parameter {param!r}"))
            continue
        try:
            hz[key] = _number(float, hz[key])
        except ValueError:
            problems.append(Problem("hazard", line("hazard", key),
                                    f"{key} = {hz[key]!r} is not a valid float"))


def _check_initial(init, problems, line):
    prof = init.get("profile")
    if prof is None:
        return
    if prof not in PROFILE_REGISTRY:
        problems.append(Problem("initial", line("initial", "profile"),
                                f"unknown profile {prof!r}; known: {sorted(PROFILE_REGISTRY)}"))
        return
    allowed = _factory_params(PROFILE_REGISTRY[prof])
    for key in [k for k in init if k != "profile"]:
        if key not in allowed:
            problems.append(Problem("initial", line("initial", key),
                                    f"profile {prof} has no parameter {key!r}"))
            continue
        try:
            init[key] = _number(float, init[key])
        except ValueError:
            problems.append(Problem("initial", line("initial", key),
                                    f"{key} = {init[key]!r} is not a valid float"))


def _check_kernel(kernel, problems, line, model):
    if model is not None and model != "ddm":
        problems.append(Problem("kernel", 0, "[kernel] is only used by ddm scenarios"))
    kind = kernel.get("kind")
    if kind not in KERNEL_KINDS:
        problems.append(Problem("kernel", line("kernel", "kind"),
                                f"kernel kind must be one of {KERNEL_KINDS}"))
    if "lambda" not in kernel:
        problems.append(Problem("kernel", line("kernel", "kind"), "kernel needs lambda"))
    elif kernel["lambda"] <= 0:
        problems.append(Problem("kernel", line("kernel", "lambda"), "lambda must be positive"))
    if kind == "gaussian" and "d" not in kernel:
        problems.append(Problem("kernel", line("kernel", "kind"), "gaussian kernel needs d"))
    if kernel.get("mode", "auto") not in KERNEL_MODES:
        problems.append(Problem("kernel", line("kernel", "mode"),
                                f"mode must be one of {KERNEL_MODES}"))
    if kernel.get("weights", "trapezoid") not in WEIGHT_RULES:
        problems.append(Problem("kernel", line("kernel", "weights"),
                                f"weights must be one of {WEIGHT_RULES}"))


# ---------------------------------------------------------------------------
# presets: the worked examples with their stated parameters

_EX1_HAZARD = """[hazard]
kind = step-fixed
phi = exp-decay
phi.k = 9
sigma = 0.5
"""
_EX2_HAZARD = """[hazard]
kind = step-fixed
phi = hill
phi.a = 10
phi.b = 0.5
sigma = 1
"""
_EX3_HAZARD = """[hazard]
kind = step-fixed
phi = sigmoid
phi.a = 9
phi.b = 3.5
sigma = 0.5
"""

PRESETS = {
    "example1-itm": """[model]
type = itm
""" + _EX1_HAZARD + """[initial]
profile = plateau-exp
height = 0.5
knee = 1
[grid]
ds = 0.02
dt_factor = 1
T = 30
[output]
snapshots = 0, 10, 30
""",
    "example1-ddm": """[model]
type = ddm
""" + _EX1_HAZARD + """[kernel]
kind = gaussian
d = 0.5
lambda = 0.001
mode = exact-limit
[initial]
profile = plateau-exp
height = 0.5
knee = 1
[grid]
ds = 0.02
T = 20
[output]
snapshots = 0, 15
""",
    "example2-itm": """[model]
type = itm
""" + _EX2_HAZARD + """[initial]
profile = shifted-exp
onset = 1
[grid]
ds = 0.02
dt_factor = 1
T = 20
[output]
snapshots = 0, 10, 20
""",
    "example2-ddm": """[model]
type = ddm
""" + _EX2_HAZARD + """[kernel]
kind = exponential
lambda = 0.001
mode = ode
[initial]
profile = shifted-exp
onset = 1
[grid]
ds = 0.02
T = 20
dt = 0.001
[output]
snapshots = 0, 10, 20
""",
    "example2-ddm-delay": """[model]
type = ddm
""" + _EX2_HAZARD + """[kernel]
kind = gaussian
d = 1
lambda = 0.001
mode = exact-limit
[initial]
profile = shifted-exp
onset = 1
[grid]
ds = 0.02
T = 15
[output]
snapshots = 0, 6
""",
    "example3-itm": """[model]
type = itm
""" + _EX3_HAZARD + """[initial]
profile = shifted-exp
onset = 0.5
[grid]
ds = 0.02
dt_factor = 1
T = 10
[branch]
policy = fixed-index
index = 1
[output]
snapshots = 0, 10
""",
    "example3-ddm": """[model]
type = ddm
""" + _EX3_HAZARD + """[kernel]
kind = exponential
lambda = 0.001
mode = ode
[initial]
profile = shifted-exp
onset = 0.5
[grid]
ds = 0.02
T = 10
dt = 0.001
[output]
snapshots = 0, 10
""",
    "example4-itm": """[model]
type = itm
[hazard]
kind = step-variable
sigma_fn = hill-refractory
coupling = 2.5
[initial]
profile = shifted-exp
onset = 1
[grid]
ds = 0.02
dt_factor = 1
T = 14
[output]
snapshots = 0, 14
""",
    "example4-ddm": """[model]
type = ddm
[hazard]
kind = step-variable
sigma_fn = hill-refractory
[kernel]
kind = exponential
lambda = 0.001
J = 2.5
mode = ode
[initial]
profile = shifted-exp
onset = 1
[grid]
ds = 0.02
T = 14
dt = 0.001
[output]
snapshots = 0, 14
""",
    "blowup-ddm": """[model]
type = ddm
[hazard]
kind = unbounded-quadratic
a = 1
b = 1
cap = 1000
[kernel]
kind = exponential
lambda = 1
mode = ode
[initial]
profile = indicator
a = 0
b = 1
[grid]
ds = 1
T = 3
dt = 0.0001
""",
    "linear-unit": """[model]
type = linear
[hazard]
kind = step-fixed
phi = constant
phi.c = 1
sigma = 0
[flux]
value = 1
[initial]
profile = smooth-compatible
[grid]
ds = 0.04
T = 1
dt_factor = 1
""",
}

# example3 branches 2 and 3 differ only in the fixed index
for _k in (2, 3):
    PRESETS[f"example3-itm-{_k}"] = PRESETS["example3-itm"].replace(
        "index = 1", f"index = {_k}")


def load_preset(name) -> ScenarioConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError([Problem("", 0, f"unknown preset {name!r}; known: {sorted(PRESETS)}")]) from None
    return parse_config(text, name=name)
