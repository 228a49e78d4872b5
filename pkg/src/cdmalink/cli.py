"""Command line front end: ``cdmalink pdf | ber | validate SCENARIO``.

Output tables are CSV preceded by ``#`` metadata lines holding the resolved
configuration.  Floats are written as their shortest round-trip repr, so a
rerun with the same inputs reproduces the file byte for byte.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from . import rng as rngmod
from .analytic import (
    Direction,
    DistanceSpectrum,
    Grid,
    GridError,
    LinkScenario,
    avg_coded_snr,
    convolve_pdfs,
    downlink_bit_pdf,
    downlink_combined_pdf,
    downlink_snr_limit,
    gaussian_approx_pdf,
    pairwise_error_prob,
    point_mass_pdf,
    self_convolve,
    union_bound_ber,
    uplink_bit_pdf,
    uplink_combined_pdf,
)
from .linkchain import Fading
from .montecarlo import (
    ExperimentConfig,
    InsufficientBitsError,
    estimate_ber,
    estimate_snr_pdf,
    ks_distance,
    measure_interference_variance,
)
from .scenario import ScenarioError, ScenarioFile, load, resolved_items

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

SWEEPABLE = ("ebn0_db", "users")


class UsageError(Exception):
    pass


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def resolve_seed(sf: ScenarioFile, override: int | None = None) -> int:
    """Command-line seed, else the file's, else the environment or package default."""
    if override is not None:
        return override
    if sf.experiment.seed is not None:
        return sf.experiment.seed
    return rngmod.default_seed()


def _preamble(command: str, sf: ScenarioFile, extra: list[tuple[str, object]]) -> list[str]:
    lines = [f"# cdmalink {command}", f"# version = {__version__}"]
    for key, value in extra:
        lines.append(f"# {key} = {value if isinstance(value, str) else _num(value)}")
    lines += [f"# config.{key} = {value}" for key, value in resolved_items(sf)]
    return lines


def _write(lines: list[str], out: str | None):
    text = "\n".join(lines) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _scenario_metadata(sc: LinkScenario, rate_inverse: int) -> list[tuple[str, object]]:
    coded = sc.coded_snr_db
    items: list[tuple[str, object]] = [
        ("users", sc.num_users),
        ("energy_per_coded_bit", sc.energy_per_coded_bit),
        ("noise_density", sc.noise_density),
        ("ebn0_coded_db", coded),
        ("ebn0_info_db", coded + 10 * math.log10(rate_inverse)),
    ]
    try:
        items.append(("avg_coded_snr", avg_coded_snr(sc)))
    except ValueError:
        items.append(("avg_coded_snr", "inf"))
    return items


# -- pdf ---------------------------------------------------------------------


def _pdf_edge(sc: LinkScenario, direction: Direction, d: int) -> float:
    if direction is Direction.DOWNLINK and sc.interferers:
        return d * downlink_snr_limit(sc)
    return float(stats.gamma.ppf(1 - 1e-9, d)) * avg_coded_snr(sc)


def _column(sc: LinkScenario, direction: Direction, d: int, method: str, grid: Grid) -> np.ndarray:
    g = grid.points
    if direction is Direction.UPLINK or sc.interferers == 0:
        # a single-user downlink is the uplink case
        up = sc.with_direction(Direction.UPLINK)
        if method == "convolution" and d > 1:
            return self_convolve(uplink_bit_pdf(up), d)(g)
        return uplink_combined_pdf(up, d, grid).values.copy()
    dn = sc.with_direction(Direction.DOWNLINK)
    if method == "gaussian":
        return gaussian_approx_pdf(dn, d)(g)
    if d == 1:
        return downlink_bit_pdf(dn, grid).values.copy()
    return downlink_combined_pdf(dn, d)(g)


def cmd_pdf(args) -> int:
    sf = load(args.scenario)
    d = args.d if args.d is not None else sf.scenario.combined_bits
    if d < 1:
        raise UsageError("--d must be a positive integer")
    directions = sf.directions
    if args.method == "gaussian" and directions == [Direction.UPLINK]:
        raise UsageError("the Gaussian approximation applies to the downlink only")
    sc = sf.link(directions[0])
    if sc.noise_density == 0:
        raise UsageError("the SNR pdf needs thermal noise (finite ebn0_db)")
    upper = sf.experiment.grid_max or 1.1 * max(_pdf_edge(sc, dr, d) for dr in directions)
    grid = Grid(upper, sf.experiment.grid_points)
    columns = {}
    for dr in directions:
        # the approximation replaces the exact convolution only on the downlink
        method = args.method if dr is Direction.DOWNLINK else ("exact" if args.method == "gaussian" else args.method)
        columns[dr] = _column(sc, dr, d, method, grid)
    meta = [("command", "pdf"), ("method", args.method), ("combined_bits", d)]
    meta += _scenario_metadata(sc, sf.code.rate_inverse)
    if Direction.DOWNLINK in directions and sc.interferers:
        meta.append(("downlink_snr_limit", downlink_snr_limit(sc)))
    meta += [("grid_max", grid.gamma_max), ("grid_points", grid.num_points)]
    lines = _preamble("pdf", sf, meta)
    lines.append("gamma,uplink_pdf,downlink_pdf")
    up = columns.get(Direction.UPLINK)
    dn = columns.get(Direction.DOWNLINK)
    for i, gamma in enumerate(grid.points):
        lines.append(
            f"{_num(gamma)},{_num(None if up is None else up[i])},{_num(None if dn is None else dn[i])}"
        )
    _write(lines, args.out or sf.output.pdf)
    return EXIT_OK


# -- ber ---------------------------------------------------------------------


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``param=lo:hi:step`` with ``hi`` included."""
    try:
        name, _, spec = text.partition("=")
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise UsageError(f"bad sweep {text!r}; expected param=lo:hi:step") from None
    name = name.strip()
    if name not in SWEEPABLE:
        raise UsageError(f"cannot sweep {name!r}; choose from {', '.join(SWEEPABLE)}")
    if step <= 0 or hi < lo:
        raise UsageError("sweep needs lo <= hi and a positive step")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    values = [round(lo + i * step, 12) for i in range(count)]
    if name == "users":
        values = [int(v) for v in values]
    return name, values


def pairwise_probabilities(sc: LinkScenario, distances, fading: Fading) -> dict[int, float]:
    """p2(d) = E[Q(sqrt(2 gamma_d))] for each distance d."""
    distances = sorted(distances)
    if sc.interferers == 0 and sc.noise_density == 0:
        return {d: 0.0 for d in distances}
    gbar = avg_coded_snr(sc)
    if fading is Fading.NONE:
        out = {}
        for d in distances:
            g0 = d * gbar
            out[d] = pairwise_error_prob(point_mass_pdf(g0, Grid.with_step(2 * g0, g0 / 1000)))
        return out
    if fading is Fading.BLOCK:
        raise UsageError("the analytic bound assumes ideal interleaving (fading = iid)")
    if sc.direction is Direction.UPLINK or sc.interferers == 0:
        up = sc.with_direction(Direction.UPLINK)
        return {d: pairwise_error_prob(uplink_combined_pdf(up, d)) for d in distances}
    bit = downlink_bit_pdf(sc)
    out = {}
    current, at = None, 0
    for d in distances:
        if current is None:
            current = self_convolve(bit, d)
        else:
            while at < d:
                current = convolve_pdfs(current, bit)
                at += 1
        at = d
        out[d] = pairwise_error_prob(current)
    return out


def cmd_ber(args) -> int:
    sf = load(args.scenario)
    direction = Direction(args.direction) if args.direction else None
    if direction is None:
        if sf.scenario.direction == "both":
            raise UsageError("ber needs a single link; set direction in the file or pass --direction")
        direction = sf.directions[0]
    want_bound = args.mode in ("bound", "both")
    want_sim = args.mode in ("simulate", "both")
    spectrum: DistanceSpectrum | None = None
    code = sf.code_spec()
    if want_bound:
        spectrum = sf.spectrum()
        if spectrum is None:
            raise UsageError("the bound needs a distance spectrum or generators in [code]")
    if want_sim and code is None:
        raise UsageError("simulation needs generators in [code]")
    seed = resolve_seed(sf, args.seed)
    name, values = parse_sweep(args.sweep) if args.sweep else ("ebn0_db", [sf.scenario.ebn0_db])
    rows = []
    violations = []
    for value in values:
        sc = sf.link(direction, **{name: value})
        bound = sim = None
        if want_bound:
            p2 = pairwise_probabilities(sc, spectrum.distances, sf.fading)
            bound = union_bound_ber(spectrum, p2)
        if want_sim:
            config = ExperimentConfig(
                sc,
                code,
                num_trials=sf.experiment.trials,
                seed=seed,
                block_length=sf.experiment.block_length,
                interleaver_depth=sf.experiment.interleaver_depth,
                fading=sf.fading,
                max_errors=sf.experiment.max_errors,
                combining=sf.experiment.combining,
            )
            sim = estimate_ber(config)
            if bound is not None and sim.wilson_interval_95[0] > bound:
                violations.append(value)
        rows.append((value, bound, sim))
    meta = [("command", "ber"), ("mode", args.mode), ("direction", direction.value), ("seed", seed)]
    meta += [("sweep", name), ("fading", sf.fading.value)]
    meta += _scenario_metadata(sf.link(direction), sf.code.rate_inverse)
    if spectrum is not None:
        meta.append(("free_distance", spectrum.free_distance))
        meta.append(("spectrum", " ".join(f"{d}:{_num(c)}" for d, c in spectrum.weights.items())))
    if want_bound and want_sim:
        meta.append(("bound_violations", " ".join(_num(v) for v in violations) or "none"))
    lines = _preamble("ber", sf, meta)
    lines.append("sweep_value,bound_ber,simulated_ber,ci_lo,ci_hi")
    for value, bound, sim in rows:
        cells = [_num(value), _num(bound)]
        if sim is None:
            cells += ["", "", ""]
        else:
            cells += [_num(sim.point_estimate), _num(sim.wilson_interval_95[0]), _num(sim.wilson_interval_95[1])]
        lines.append(",".join(cells))
    _write(lines, args.out or sf.output.ber)
    for v in violations:
        print(f"warning: simulated BER exceeds the union bound at {name} = {_num(v)}", file=sys.stderr)
    return EXIT_OK


# -- validate ----------------------------------------------------------------

KS_LIMIT = 0.01
INTERFERENCE_TOLERANCE = 0.05
NORMALIZATION_TOLERANCE = 1e-6


def validation_checks(sf: ScenarioFile, seed: int, interference_symbols: int = 200_000):
    """Yield (name, passed, detail) for the self-checks of a scenario."""
    for direction in sf.directions:
        sc = sf.link(direction)
        tag = direction.value
        if direction is Direction.DOWNLINK and sc.interferers == 0:
            yield f"{tag}_single_user", True, "no interferers; identical to the uplink"
            continue
        if sc.noise_density == 0:
            yield f"{tag}_noise", False, "SNR statistics need thermal noise"
            continue
        grid = sf.histogram_grid(sc)
        config = ExperimentConfig(sc, num_trials=sf.experiment.trials, seed=seed, grid=grid, fading=sf.fading)
        covered = config.covers_support()
        yield f"{tag}_grid_coverage", covered, f"grid max {_num(grid.gamma_max)}"
        if direction is Direction.UPLINK:
            ref = uplink_bit_pdf(sc)
        else:
            ref = downlink_bit_pdf(sc)
        mass = ref.integral()
        yield (
            f"{tag}_normalization",
            abs(mass - 1) <= NORMALIZATION_TOLERANCE,
            f"integral {_num(mass)}",
        )
        emp = estimate_snr_pdf(config)
        ks = ks_distance(emp.samples, ref)
        yield f"{tag}_ks", ks < KS_LIMIT, f"KS {ks:.5f} over {len(emp.samples)} samples"
        if direction is Direction.DOWNLINK:
            limit = downlink_snr_limit(sc)
            top = float(emp.samples.max())
            yield f"{tag}_support", top <= limit, f"max sample {_num(top)} vs limit {_num(limit)}"
        if sc.interferers:
            want = 2 * sc.interferers * sc.energy_per_coded_bit
            got = measure_interference_variance(sc, interference_symbols, seed, sf.fading)
            rel = abs(got - want) / want
            yield f"{tag}_interference", rel <= INTERFERENCE_TOLERANCE, f"{got:.4f} vs {want:.4f}"
        if direction is Direction.UPLINK:
            d = 4
            up = sc.with_direction(Direction.UPLINK)
            conv = self_convolve(uplink_bit_pdf(up, Grid.with_step(40 * avg_coded_snr(up), avg_coded_snr(up) / 200)), d)
            exact = uplink_combined_pdf(up, d, conv.grid)
            err = float(np.max(np.abs(conv.values - exact.values)) / exact.peak)
            yield f"{tag}_closed_form_vs_convolution", err <= 1e-3, f"relative sup error {err:.2e}"


def cmd_validate(args) -> int:
    sf = load(args.scenario)
    seed = resolve_seed(sf, args.seed)
    print(f"# cdmalink validate {args.scenario} seed = {seed}")
    ok = True
    for name, passed, detail in validation_checks(sf, seed):
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return EXIT_OK if ok else EXIT_FAILED


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdmalink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pdf", help="tabulate the SNR pdf of d combined coded bits")
    p.add_argument("scenario")
    p.add_argument("--d", type=int, default=None, help="combined coded bits (default from the file, else 1)")
    p.add_argument("--method", choices=("exact", "convolution", "gaussian"), default="exact")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("ber", help="union bound and/or simulated bit error rate")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=("bound", "simulate", "both"), default="bound")
    p.add_argument("--sweep", default=None, metavar="PARAM=LO:HI:STEP")
    p.add_argument("--direction", choices=("uplink", "downlink"), default=None)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("validate", help="statistical self-checks of a scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, UsageError, InsufficientBitsError, FileNotFoundError) as exc:
        print(f"cdmalink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GridError, ValueError) as exc:
        print(f"cdmalink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
