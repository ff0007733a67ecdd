"""Command-line front end.

Config files are line based ``key = value`` text with ``#`` comments; later
keys override earlier ones. Angles are radians and may be written as
``pi/6``, ``3pi/8`` or plain numbers. Complex coefficients use ``a+bi``,
``bi`` or ``a``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import os
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import bell, fairsampling, montecarlo, synthesis
from .hilbert import AnalyzerSpec, Convention, SpectrumModel

COMMANDS = ("synthesize", "curve", "chsh", "fair-sampling", "dimension", "simulate")
OUTPUT_DIR_ENV = "OAMBELL_OUTPUT_DIR"

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class RunConfig:
    coefficients: dict[int, complex] = field(default_factory=dict)
    convention: Convention = Convention.PAPER_IDEAL
    spectrum_support: tuple[int, ...] | None = None
    custom_weights: dict[int, complex] = field(default_factory=dict)
    grid_points: int = 720
    mode: bell.CorrelationMode = bell.CorrelationMode.CHSH_EQ2
    seed: int = 0
    theta: tuple[float, ...] = (0.0,)
    fair_tolerance: float = 1e-9
    fit_restarts: int = 8
    fit_real_weights: bool = False
    simulate_convention: Convention = Convention.NORMALIZED_FLAT
    pair_rate: float = 1e5
    duration: float = 1.0
    efficiency_a: float = 1.0
    efficiency_b: float = 1.0
    background_a: float = 0.0
    background_b: float = 0.0
    window: float | None = 0.0  # None means tuned from accidental_fraction
    accidental_fraction: float = 0.05
    delta_theta: tuple[float, ...] = (math.pi / 8, 3 * math.pi / 8, math.pi / 6, math.pi / 2)
    bootstrap: int = 0
    output: str | None = None

    def analyzer(self) -> AnalyzerSpec:
        return AnalyzerSpec.from_coefficients(self.coefficients)

    def spectrum(self, convention: Convention | None = None) -> SpectrumModel:
        convention = convention or self.convention
        support = self.spectrum_support or self.analyzer().support
        if convention is Convention.PAPER_IDEAL:
            return SpectrumModel.paper_ideal(support)
        if convention is Convention.NORMALIZED_FLAT:
            return SpectrumModel.normalized_flat(support)
        if not self.custom_weights:
            raise ConfigError("custom convention needs c<ell> weights")
        return SpectrumModel.custom(self.custom_weights)

    def grid(self) -> np.ndarray:
        return bell.default_grid(self.grid_points)


_NUMBER = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?"
_ANGLE = re.compile(rf"^([+-]?)({_NUMBER})?\s*\*?\s*pi(?:\s*/\s*({_NUMBER}))?$")


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s or "j" in s.lower() or not s[-1].isdigit() and s[-1] not in ".i":
        raise ValueError(f"malformed complex literal {text!r}")
    if s.endswith("i"):
        body = s[:-1]
        # bare 'i', '+i', '2-i' -> explicit unit coefficient
        if not body or body[-1] in "+-":
            body += "1"
        s = body + "j"
    try:
        value = complex(s)
    except ValueError:
        raise ValueError(f"malformed complex literal {text!r}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"non-finite complex literal {text!r}")
    return value


def parse_angle(text: str) -> float:
    s = text.strip().lower()
    m = _ANGLE.match(s)
    if m:
        sign, num, den = m.groups()
        value = (float(num) if num else 1.0) * math.pi / (float(den) if den else 1.0)
        return -value if sign == "-" else value
    value = float(s)
    if not math.isfinite(value):
        raise ValueError(f"non-finite angle {text!r}")
    return value


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _nonneg(text: str) -> float:
    value = _float(text)
    if value < 0:
        raise ValueError(f"expected a non-negative number, got {text!r}")
    return value


def _unit(text: str) -> float:
    value = _float(text)
    if not 0 <= value <= 1:
        raise ValueError(f"expected a number in [0, 1], got {text!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {text!r}")
    return value


def _bool(text: str) -> bool:
    s = text.strip().lower()
    if s in ("true", "yes", "1", "on"):
        return True
    if s in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    values = tuple(int(v) for v in text.split(","))
    if any(v < 1 for v in values):
        raise ValueError("support entries must be positive")
    return values


def _angle_list(text: str) -> tuple[float, ...]:
    return tuple(parse_angle(v) for v in text.split(","))


def _window(text: str) -> float | None:
    return None if text.strip().lower() == "auto" else _nonneg(text)


def _positive(text: str) -> float:
    value = _float(text)
    if value <= 0:
        raise ValueError(f"expected a positive number, got {text!r}")
    return value


# key -> (field name, parser, help with units)
KEYS = {
    "convention": ("convention", Convention, "paper-ideal | normalized-flat | custom"),
    "spectrum_support": ("spectrum_support", _int_list, "comma list of positive ell (default: analyser support)"),
    "grid_points": ("grid_points", _positive_int, "points per period [-pi/2, pi/2)"),
    "mode": ("mode", bell.CorrelationMode, "eq1 (per emitted pair) | eq2 (four-rate renormalized)"),
    "seed": ("seed", int, "integer seed for the fit and the Monte Carlo"),
    "theta": ("theta", _angle_list, "analyser orientations for matrix dumps, radians"),
    "fair_tolerance": ("fair_tolerance", _positive, "max entrywise deviation accepted as fair"),
    "fit_restarts": ("fit_restarts", _positive_int, "random restarts of the simplex fit"),
    "fit_real_weights": ("fit_real_weights", _bool, "restrict (b*)^2 to real signed weights"),
    "simulate_convention": ("simulate_convention", Convention, "unit-norm spectrum used by simulate"),
    "pair_rate": ("pair_rate", _nonneg, "emitted pairs per second"),
    "duration": ("duration", _positive, "integration time per setting, seconds"),
    "efficiency_a": ("efficiency_a", _unit, "detection efficiency arm A"),
    "efficiency_b": ("efficiency_b", _unit, "detection efficiency arm B"),
    "background_a": ("background_a", _nonneg, "uncorrelated background counts per second, arm A"),
    "background_b": ("background_b", _nonneg, "uncorrelated background counts per second, arm B"),
    "window": ("window", _window, "coincidence window in seconds, or 'auto'"),
    "accidental_fraction": ("accidental_fraction", _unit, "accidental share of raw coincidences when window = auto"),
    "delta_theta": ("delta_theta", _angle_list, "relative angles simulated, radians"),
    "bootstrap": ("bootstrap", int, "bootstrap resamples for sigma_S (0 = Poisson propagation)"),
    "output": ("output", str, "output file path"),
}
_COEFF_KEY = re.compile(r"^b(\d+)$")
_WEIGHT_KEY = re.compile(r"^c(-?\d+)$")


def parse_config(text: str) -> RunConfig:
    config = RunConfig()
    coefficients: dict[int, complex] = {}
    weights: dict[int, complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if m := _COEFF_KEY.match(key):
                ell = int(m.group(1))
                if ell < 1:
                    raise ValueError("analyser ell must be positive")
                coefficients[ell] = parse_complex(value)
            elif m := _WEIGHT_KEY.match(key):
                weights[int(m.group(1))] = parse_complex(value)
            elif key in KEYS:
                name, parser, _ = KEYS[key]
                setattr(config, name, parser(value))
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
    if not coefficients:
        raise ConfigError("missing required key: at least one analyser coefficient b<ell>")
    config.coefficients = coefficients
    config.custom_weights = weights
    return config


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        text = resources.files("oambell").joinpath("data/paper.cfg").read_text()
    else:
        text = Path(path).read_text()
    return parse_config(text)


def format_number(x: float) -> str:
    return f"{x:.12g}"


def format_complex(z: complex) -> str:
    re_, im = format_number(z.real), format_number(abs(z.imag))
    if z.imag == 0:
        return re_
    sign = "-" if z.imag < 0 else "+"
    if z.real == 0:
        return f"{'-' if z.imag < 0 else ''}{im}i"
    return f"{re_}{sign}{im}i"


def _write_csv(stream: TextIO, header: Sequence[str], rows) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) if isinstance(v, float) else v for v in row])


def format_matrix(matrix: fairsampling.HermitianMatrix) -> str:
    lines = ["basis," + ",".join(str(ell) for ell in matrix.basis)]
    for row in matrix.entries:
        lines.append(",".join(f"{format_number(z.real)},{format_number(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> fairsampling.HermitianMatrix:
    lines = [l for l in text.strip().splitlines() if l]
    basis = tuple(int(v) for v in lines[0].split(",")[1:])
    rows = []
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")]
        rows.append([complex(r, i) for r, i in zip(vals[::2], vals[1::2])])
    return fairsampling.HermitianMatrix(basis, np.array(rows))


def run_curve(config: RunConfig, out: TextIO) -> None:
    spec, spectrum = config.analyzer(), config.spectrum()
    grid = config.grid()
    probs = bell.four_setting_grid(spectrum, spec, grid)
    _write_csv(
        out,
        ("delta_theta", "p_psipsi", "p_psiperp", "p_perppsi", "p_perpperp"),
        ([float(d), *map(float, p)] for d, p in zip(grid, probs)),
    )


def run_chsh(config: RunConfig, out: TextIO) -> None:
    spec, spectrum = config.analyzer(), config.spectrum()
    grid = config.grid()
    e = bell.correlation_curve(spectrum, spec, grid, config.mode).values
    s = bell.s_scan(spectrum, spec, grid, config.mode).values
    _write_csv(out, ("delta_theta", "E", "S"), ([float(d), float(a), float(b)] for d, a, b in zip(grid, e, s)))


def run_fair_sampling(config: RunConfig, out: TextIO) -> None:
    spec = config.analyzer()
    verdict = fairsampling.theta_dependence(spec, fairsampling.default_theta_grid(64), config.fair_tolerance)
    out.write(f"fair={'true' if verdict.fair else 'false'}\n")
    out.write(f"max_deviation={format_number(verdict.max_deviation)}\n")
    out.write(f"tolerance={format_number(config.fair_tolerance)}\n")
    for m, amp in sorted(verdict.harmonic_content.items()):
        out.write(f"harmonic[{m}]={format_number(amp)}\n")
    for theta in config.theta:
        out.write(f"\n# theta={format_number(theta)}\n")
        out.write(format_matrix(fairsampling.sampled_subspace_operator(spec, theta)))


def run_dimension(config: RunConfig, out: TextIO) -> None:
    curve = bell.probability_curve(config.spectrum(), config.analyzer(), config.grid())
    out.write(f"D = {format_number(bell.dimensionality(curve))}\n")
    out.write(f"# note: {bell.DIMENSIONALITY_CAVEAT}\n")


def run_synthesize(config: RunConfig, out: TextIO) -> None:
    spec = config.analyzer()
    target = synthesis.square_wave_signal()
    fit = synthesis.fit_analyzer_coefficients(
        target,
        support=spec.support,
        restarts=config.fit_restarts,
        seed=config.seed,
        real_weights=config.fit_real_weights,
        grid_points=config.grid_points,
    )
    baseline = synthesis.rms_residual(spec, target, config.grid())
    out.write(f"# objective: {fit.objective}\n")
    out.write(f"# parametrization: {fit.parametrization}\n")
    out.write(f"residual = {format_number(fit.residual)}\n")
    out.write(f"baseline_residual = {format_number(baseline)}\n")
    out.write(f"iterations = {fit.iterations}\n")
    out.write(f"converged = {'true' if fit.converged else 'false'}\n")
    for ell, b in fit.spec.as_dict.items():
        out.write(f"b{ell} = {format_complex(b)}\n")


def _mc_config(config: RunConfig) -> montecarlo.ExperimentConfig:
    spec = config.analyzer()
    mc = montecarlo.ExperimentConfig(
        spectrum=config.spectrum(config.simulate_convention),
        spec_a=spec,
        spec_b=spec,
        pair_rate=config.pair_rate,
        duration_per_setting=config.duration,
        efficiency_a=config.efficiency_a,
        efficiency_b=config.efficiency_b,
        window=config.window or 0.0,
        background_rate_a=config.background_a,
        background_rate_b=config.background_b,
        seed=config.seed,
    )
    if config.window is None:
        mc = dataclasses.replace(mc, window=montecarlo.window_for_accidental_fraction(mc, config.accidental_fraction))
    return mc


def run_simulate(config: RunConfig, out: TextIO) -> None:
    mc = _mc_config(config)
    record = montecarlo.run_experiment(mc, config.delta_theta)
    out.write(record.to_csv())
    out.write("\n# analysis\n")
    out.write(f"# window = {format_number(mc.window)}\n")
    for d in config.delta_theta:
        try:
            record.lookup(3 * d, "pp")
        except KeyError:
            continue
        report = montecarlo.estimate_S(record, config.mode, d, bootstrap=config.bootstrap, seed=config.seed)
        out.write(
            f"# delta_theta = {format_number(d)}, mode = {report.mode.value}, "
            f"S = {format_number(report.s)}, sigma_S = {format_number(report.sigma)}\n"
        )


RUNNERS = {
    "synthesize": run_synthesize,
    "curve": run_curve,
    "chsh": run_chsh,
    "fair-sampling": run_fair_sampling,
    "dimension": run_dimension,
    "simulate": run_simulate,
}


def _validate(command: str, config: RunConfig) -> None:
    if command not in RUNNERS:
        raise ConfigError(f"unknown command {command!r}")
    config.analyzer()
    config.spectrum()
    if command == "simulate":
        _mc_config(config)


def dispatch(command: str, config: RunConfig, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        _validate(command, config)
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_VALIDATION

    buf = io.StringIO()
    try:
        RUNNERS[command](config, buf)
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit code 2
        print(f"error: {command} failed: {exc}", file=stderr)
        return EXIT_RUNTIME

    target = config.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        suffix = ".csv" if command in ("curve", "chsh", "simulate") else ".txt"
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{command}{suffix}")
    if target is None:
        stdout.write(buf.getvalue())
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="\n") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<20} {help_}" for k, (_, _, help_) in KEYS.items())
    parser = argparse.ArgumentParser(
        prog="oambell",
        description="Tailored OAM Bell-CHSH laboratory.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "config keys (key = value):\n"
            "  b<ell>               analyser coefficient, complex (e.g. b5 = 0.389i)\n"
            "  c<ell>               custom spectrum weight for signed ell, complex\n"
            f"{keys}\n\n"
            f"Without --output, data goes to stdout or to ${OUTPUT_DIR_ENV}/<command>.csv|txt."
        ),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="config file (default: bundled paper.cfg)")
    parser.add_argument("--mode", choices=[m.value for m in bell.CorrelationMode], help="correlation function")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--output", help="output path (overrides config)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.mode:
        config.mode = bell.CorrelationMode(args.mode)
    if args.seed is not None:
        config.seed = args.seed
    if args.output:
        config.output = args.output
    return dispatch(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
