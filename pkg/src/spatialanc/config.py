"""Reading and writing experiment config files.

The format is INI with four sections::

    [scene]
    primary_sources = -3.5 0.2
    secondary_sources = ring(12, 1.0)
    reference_mics = ring(6, 2.0, 0.03)     # third arg: alternating radial shift
    error_mics = 0.3 0.0; -0.3 0.0
    region_center = 0 0
    region_radius = 0.5
    scatterer_center = 0 0
    scatterer_radius = 0.15                 # or "none"
    sound_speed = 343.0

    [kernel]
    beta = 6.0
    eta = toward_source                     # or "x y"
    lambda = auto                           # or a number

    [control]
    algorithms = nlms, fixed_kir, nlms_transition
    mu0 = 0.1
    epsilon = 1e-8
    gamma = 0.9

    [run]
    frequencies = 100:500:10                # inclusive range, or a comma list
    iterations = 10000
    snr_db = 40                             # "inf" disables noise
    grid_spacing = 0.0357
    eval_spacing = same
    seed = 0

Position lists are ``x y`` pairs separated by ``;``. Written configs always
spell positions out with full-precision floats so they re-parse exactly.
"""

import configparser
from dataclasses import replace
import math
from pathlib import Path
import re

import numpy as np

from .control import ALGORITHMS, StepParams
from .errors import ConfigError
from .experiment import ExperimentConfig
from .scene import DEFAULT_SOUND_SPEED, Disk, SceneConfig, ring

PRESET_DIR = Path(__file__).parent / "presets"
_RING = re.compile(r"^ring\(\s*([^,]+)\s*,\s*([^,]+?)\s*(?:,\s*([^,]+?)\s*)?\)$")


class _Reader:
    """Typed access to a parsed config that reports section, key and line on failure."""

    def __init__(self, parser: configparser.ConfigParser, text: str, source: str):
        self.parser = parser
        self.lines = text.splitlines()
        self.source = source

    def _line_of(self, section, key):
        in_section = False
        for no, line in enumerate(self.lines, start=1):
            stripped = line.strip()
            if stripped.startswith("["):
                in_section = stripped.lower() == f"[{section}]"
            elif in_section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
                return no
        return None

    def fail(self, section, key, message):
        line = self._line_of(section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {message}")

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if default is None:
            self.fail(section, key, "missing required key")
        return default

    def number(self, section, key, default=None, cast=float):
        text = self.raw(section, key, None if default is None else str(default))
        try:
            value = cast(text)
        except ValueError:
            self.fail(section, key, f"expected a number, got {text!r}")
        if isinstance(value, float) and math.isnan(value):
            self.fail(section, key, "NaN is not allowed")
        return value

    def point(self, section, key, default=None):
        pts = self.points(section, key, default)
        if len(pts) != 1:
            self.fail(section, key, "expected a single 'x y' position")
        return pts[0]

    def points(self, section, key, default=None):
        text = self.raw(section, key, default)
        m = _RING.match(text)
        if m:
            try:
                num = int(m.group(1))
                radius = float(m.group(2))
                shift = float(m.group(3)) if m.group(3) else 0.0
            except ValueError:
                self.fail(section, key, f"malformed ring specification {text!r}")
            shifts = np.where(np.arange(num) % 2 == 0, shift, -shift)
            return tuple(map(tuple, ring(num, radius, shifts=shifts)))
        out = []
        for chunk in filter(None, (c.strip() for c in text.split(";"))):
            parts = chunk.replace(",", " ").split()
            try:
                coords = [float(p) for p in parts]
            except ValueError:
                self.fail(section, key, f"malformed position {chunk!r}")
            if len(coords) != 2:
                self.fail(section, key, f"position {chunk!r} must have two coordinates")
            out.append(tuple(coords))
        if not out:
            self.fail(section, key, "no positions given")
        return tuple(out)


def parse_frequencies(text: str) -> tuple:
    """``"400"``, ``"100, 200"`` or inclusive ``"100:500:10"``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if not step > 0 or stop < start:
            raise ConfigError(f"empty frequency range {text!r}")
        count = int(round((stop - start) / step)) + 1
        return tuple(float(start + i * step) for i in range(count))
    values = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    if not values:
        raise ConfigError("no frequencies given")
    return values


def loads(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    rd = _Reader(parser, text, source)
    for section in ("scene", "run"):
        if not parser.has_section(section):
            raise ConfigError(f"{source}: missing [{section}] section")

    scat_radius = rd.raw("scene", "scatterer_radius", "none")
    scatterer = None
    if scat_radius.lower() not in ("none", "0", "0.0", "off"):
        scatterer = Disk(rd.point("scene", "scatterer_center", "0 0"), rd.number("scene", "scatterer_radius"))
    scene = SceneConfig(
        primary_sources=rd.points("scene", "primary_sources"),
        secondary_sources=rd.points("scene", "secondary_sources"),
        reference_mics=rd.points("scene", "reference_mics"),
        error_mics=rd.points("scene", "error_mics"),
        target_region=Disk(rd.point("scene", "region_center", "0 0"), rd.number("scene", "region_radius")),
        scatterer=scatterer,
        sound_speed=rd.number("scene", "sound_speed", DEFAULT_SOUND_SPEED),
    )

    path_text = rd.raw("scene", "secondary_path_scattering", "true").lower()
    if path_text not in ("true", "false"):
        rd.fail("scene", "secondary_path_scattering", "expected true or false")

    eta_text = rd.raw("kernel", "eta", "toward_source")
    eta = None if eta_text.lower() == "toward_source" else rd.point("kernel", "eta")
    lam_text = rd.raw("kernel", "lambda", "auto")
    lam = None if lam_text.lower() == "auto" else rd.number("kernel", "lambda")

    algorithms = tuple(a.strip() for a in rd.raw("control", "algorithms", ",".join(ALGORITHMS)).split(",") if a.strip())
    for a in algorithms:
        if a not in ALGORITHMS:
            rd.fail("control", "algorithms", f"unknown algorithm {a!r} (choose from {', '.join(ALGORITHMS)})")

    try:
        frequencies = parse_frequencies(rd.raw("run", "frequencies"))
    except ValueError:
        rd.fail("run", "frequencies", "expected 'f', 'f1, f2, ...' or 'start:stop:step'")
    eval_text = rd.raw("run", "eval_spacing", "same")
    checkpoints = rd.raw("run", "checkpoints", "default")

    try:
        step = StepParams(
            mu0=rd.number("control", "mu0", 0.1),
            epsilon=rd.number("control", "epsilon", 1e-8),
            gamma=rd.number("control", "gamma", 0.9),
        )
        return ExperimentConfig(
            scene=scene,
            frequencies=frequencies,
            iterations=rd.number("run", "iterations", cast=int),
            snr_db=rd.number("run", "snr_db", 40.0),
            algorithms=algorithms,
            step=step,
            beta=rd.number("kernel", "beta", 0.0),
            eta=eta,
            lam=lam,
            grid_spacing=rd.number("run", "grid_spacing", 0.0357),
            eval_spacing=None if eval_text.lower() == "same" else rd.number("run", "eval_spacing"),
            rng_seed=rd.number("run", "seed", 0, cast=int),
            checkpoints=None if checkpoints.lower() == "default" else tuple(int(c) for c in checkpoints.split(",")),
            secondary_path_scattering=path_text == "true",
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from exc


def resolve_path(name: str) -> Path:
    """A filesystem path, or the name of a bundled preset (with or without ``.cfg``)."""
    path = Path(name)
    if path.exists():
        return path
    preset = PRESET_DIR / (name if name.endswith(".cfg") else name + ".cfg")
    if preset.exists():
        return preset
    raise ConfigError(f"config file not found: {name}")


def load(name) -> ExperimentConfig:
    path = resolve_path(str(name))
    return loads(path.read_text(), source=str(path))


def _fmt(v: float) -> str:
    return repr(float(v))


def _fmt_points(points) -> str:
    return "; ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in points)


def dumps(config: ExperimentConfig) -> str:
    s = config.scene
    lines = [
        "[scene]",
        f"primary_sources = {_fmt_points(s.primary_sources)}",
        f"secondary_sources = {_fmt_points(s.secondary_sources)}",
        f"reference_mics = {_fmt_points(s.reference_mics)}",
        f"error_mics = {_fmt_points(s.error_mics)}",
        f"region_center = {_fmt_points([s.target_region.center])}",
        f"region_radius = {_fmt(s.target_region.radius)}",
    ]
    if s.scatterer is None:
        lines.append("scatterer_radius = none")
    else:
        lines += [
            f"scatterer_center = {_fmt_points([s.scatterer.center])}",
            f"scatterer_radius = {_fmt(s.scatterer.radius)}",
        ]
    lines += [
        f"secondary_path_scattering = {str(config.secondary_path_scattering).lower()}",
        f"sound_speed = {_fmt(s.sound_speed)}",
        "",
        "[kernel]",
        f"beta = {_fmt(config.beta)}",
        f"eta = {'toward_source' if config.eta is None else _fmt_points([config.eta])}",
        f"lambda = {'auto' if config.lam is None else _fmt(config.lam)}",
        "",
        "[control]",
        f"algorithms = {', '.join(config.algorithms)}",
        f"mu0 = {_fmt(config.step.mu0)}",
        f"epsilon = {_fmt(config.step.epsilon)}",
        f"gamma = {_fmt(config.step.gamma)}",
        "",
        "[run]",
        f"frequencies = {', '.join(_fmt(f) for f in config.frequencies)}",
        f"iterations = {config.iterations}",
        f"snr_db = {_fmt(config.snr_db)}",
        f"grid_spacing = {_fmt(config.grid_spacing)}",
        f"eval_spacing = {'same' if config.eval_spacing is None else _fmt(config.eval_spacing)}",
        f"seed = {config.rng_seed}",
        f"checkpoints = {'default' if config.checkpoints is None else ', '.join(str(c) for c in config.checkpoints)}",
    ]
    return "\n".join(lines) + "\n"


def with_overrides(config: ExperimentConfig, *, seed=None, frequencies=None, algorithms=None, iterations=None, no_scatterer=False):
    changes = {}
    if seed is not None:
        changes["rng_seed"] = int(seed)
    if frequencies:
        changes["frequencies"] = tuple(float(f) for f in frequencies)
    if algorithms:
        changes["algorithms"] = tuple(algorithms)
    if iterations is not None:
        changes["iterations"] = int(iterations)
    if no_scatterer:
        changes["scene"] = config.scene.without_scatterer()
    try:
        return replace(config, **changes) if changes else config
    except ValueError as exc:
        raise ConfigError(f"invalid override: {exc}") from exc
