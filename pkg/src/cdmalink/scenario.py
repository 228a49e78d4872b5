"""Scenario files: INI text with [scenario], [code], [experiment] and [output].

Example::

    [scenario]
    users = 10
    ebn0_db = 6          # per information bit
    direction = both     # uplink | downlink | both
    channel = rayleigh   # rayleigh | awgn

    [code]
    rate_inverse = 4
    constraint_length = 10
    free_distance = 164

    [experiment]
    trials = 100000
    seed = 1

Unknown sections or keys are errors that name the file and line.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .analytic import Direction, DistanceSpectrum, Grid, LinkScenario
from .convcode import CodeSpec, distance_spectrum
from .linkchain import Fading

__all__ = ["ScenarioError", "ScenarioFile", "load", "parse", "dumps", "preset_path", "PRESETS"]

PRESET_DIR = Path(__file__).parent / "presets"
PRESETS = ("fig2", "fig3", "fig4", "code57_awgn")


class ScenarioError(ValueError):
    """Invalid scenario file; the message carries the location."""


@dataclass(frozen=True)
class ScenarioSection:
    users: int = 10
    ebn0_db: float = 6.0
    direction: str = "both"
    channel: str = "rayleigh"
    fading: str = "iid"
    combined_bits: int = 1


@dataclass(frozen=True)
class CodeSection:
    rate_inverse: int = 1
    constraint_length: int | None = None
    generators: tuple[str, ...] = ()
    spectrum: tuple[tuple[int, float], ...] = ()
    free_distance: int | None = None
    spectrum_max_distance: int | None = None


@dataclass(frozen=True)
class ExperimentSection:
    trials: int = 100_000
    seed: int | None = None
    grid_points: int = 2001
    grid_max: float | None = None
    block_length: int = 1000
    interleaver_depth: int | None = None
    max_errors: int | None = 500
    combining: str = "phase"  # phase | snr (MRC weighting under fading)


@dataclass(frozen=True)
class OutputSection:
    pdf: str | None = None
    ber: str | None = None


@dataclass(frozen=True)
class ScenarioFile:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    code: CodeSection = field(default_factory=CodeSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    output: OutputSection = field(default_factory=OutputSection)
    source: str = field(default="<string>", compare=False)

    @property
    def directions(self) -> list[Direction]:
        if self.scenario.direction == "both":
            return [Direction.UPLINK, Direction.DOWNLINK]
        return [Direction(self.scenario.direction)]

    @property
    def fading(self) -> Fading:
        return Fading.NONE if self.scenario.channel == "awgn" else Fading(self.scenario.fading)

    def link(self, direction: Direction | str | None = None, **overrides) -> LinkScenario:
        """LinkScenario at unit coded-bit energy; ``overrides`` replace [scenario] values."""
        values = dataclasses.asdict(self.scenario) | overrides
        if direction is None:
            direction = self.directions[0]
        return LinkScenario.from_ebn0_db(
            int(values["users"]), float(values["ebn0_db"]), self.code.rate_inverse, direction
        )

    def code_spec(self) -> CodeSpec | None:
        if not self.code.generators:
            return None
        return CodeSpec.from_octal(self.code.constraint_length, self.code.generators)

    def free_distance(self) -> int | None:
        if self.code.free_distance is not None:
            return self.code.free_distance
        spectrum = self.spectrum()
        return spectrum.free_distance if spectrum else None

    def spectrum(self) -> DistanceSpectrum | None:
        """Spectrum from the listed pairs, else computed from the generators."""
        if self.code.spectrum:
            weights = dict(self.code.spectrum)
            return DistanceSpectrum(min(weights), weights)
        code = self.code_spec()
        if code is None:
            return None
        dfree = distance_spectrum(code, 4 * code.constraint_length * code.rate_inverse).free_distance
        limit = self.code.spectrum_max_distance or dfree + 5
        return distance_spectrum(code, limit)

    def histogram_grid(self, scenario: LinkScenario) -> Grid:
        from .montecarlo import snr_support_edge

        upper = self.experiment.grid_max or 1.1 * snr_support_edge(scenario)
        return Grid(upper, self.experiment.grid_points)


_SECTIONS = {
    "scenario": ScenarioSection,
    "code": CodeSection,
    "experiment": ExperimentSection,
    "output": OutputSection,
}
_CHOICES = {
    ("scenario", "direction"): ("uplink", "downlink", "both"),
    ("scenario", "channel"): ("rayleigh", "awgn"),
    ("scenario", "fading"): ("iid", "block"),
    ("experiment", "combining"): ("phase", "snr"),
}
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _locate(text: str) -> dict[tuple[str, str | None], int]:
    lines: dict[tuple[str, str | None], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), 1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), number)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            lines.setdefault((section, m.group(1).strip().lower()), number)
    return lines


def _optional(raw: str) -> str | None:
    raw = raw.strip()
    return None if raw == "" or raw.lower() == "none" else raw


def _convert(section: str, key: str, raw: str, annotation: str):
    value = _optional(raw)
    if value is None:
        if "None" in annotation or "tuple" in annotation:
            return () if "tuple" in annotation else None
        raise ValueError("a value is required")
    if key == "generators":
        gens = tuple(value.replace(",", " ").split())
        for g in gens:
            int(g, 8)
        return gens
    if key == "spectrum":
        pairs = []
        for item in value.replace(",", " ").split():
            d, _, c = item.partition(":")
            if not c:
                raise ValueError(f"spectrum entry {item!r} is not of the form d:c")
            pairs.append((int(d), float(c)))
        return tuple(pairs)
    if annotation.startswith("int"):
        return int(value, 0)
    if annotation.startswith("float"):
        return float(value)
    choices = _CHOICES.get((section, key))
    if choices and value.lower() not in choices:
        raise ValueError(f"expected one of {', '.join(choices)}")
    return value.lower() if choices else value


def parse(text: str, source: str = "<string>") -> ScenarioFile:
    lines = _locate(text)

    def where(section, key=None):
        line = lines.get((section, key)) or lines.get((section, None))
        return f"{source}:{line}" if line else source

    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, empty_lines_in_values=False
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from exc
    sections = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ScenarioError(f"{where(name)}: unknown section [{name}]")
        cls = _SECTIONS[name]
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in parser.items(name):
            if key not in fields:
                raise ScenarioError(f"{where(name, key)}: unknown key {key!r} in [{name}]")
            try:
                values[key] = _convert(name, key, raw, str(fields[key].type))
            except ValueError as exc:
                raise ScenarioError(f"{where(name, key)}: bad value for {key!r}: {exc}") from None
        sections[name] = cls(**values)
    result = ScenarioFile(**sections, source=source)
    try:
        _validate(result)
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    return result


def _validate(sf: ScenarioFile):
    if sf.scenario.users < 1:
        raise ValueError("users must be at least 1")
    if sf.scenario.combined_bits < 1:
        raise ValueError("combined_bits must be at least 1")
    if sf.code.generators:
        if sf.code.constraint_length is None:
            raise ValueError("generators need a constraint_length")
        sf.code_spec()
        if len(sf.code.generators) != sf.code.rate_inverse:
            raise ValueError("the number of generators must equal rate_inverse")
    if sf.code.spectrum:
        smallest = min(d for d, _ in sf.code.spectrum)
        if sf.code.free_distance is not None and sf.code.free_distance != smallest:
            raise ValueError(
                f"free_distance {sf.code.free_distance} disagrees with the spectrum (smallest d = {smallest})"
            )
        DistanceSpectrum(smallest, dict(sf.code.spectrum))
    if sf.experiment.grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    if sf.experiment.trials < 1:
        raise ValueError("trials must be at least 1")


def load(path) -> ScenarioFile:
    path = Path(path)
    return parse(path.read_text(), str(path))


def preset_path(name: str) -> Path:
    return PRESET_DIR / f"{name}.ini"


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return " ".join(f"{d}:{c!r}" for d, c in value)
        return " ".join(value)
    return str(value)


def dumps(sf: ScenarioFile) -> str:
    """Canonical text; ``parse(dumps(x)) == x``."""
    out = []
    for name, cls in _SECTIONS.items():
        out.append(f"[{name}]")
        section = getattr(sf, name)
        for f in dataclasses.fields(cls):
            out.append(f"{f.name} = {_format(getattr(section, f.name))}".rstrip())
        out.append("")
    return "\n".join(out)


def resolved_items(sf: ScenarioFile):
    """(section.key, text) pairs of the full configuration."""
    for name, cls in _SECTIONS.items():
        section = getattr(sf, name)
        for f in dataclasses.fields(cls):
            yield f"{name}.{f.name}", _format(getattr(section, f.name))
