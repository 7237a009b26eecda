"""Experiment configuration: CLI flags plus an optional key = value file.

Flags override file values; preset defaults fill whatever remains.  The
fully resolved configuration is echoed into every output file.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from fractions import Fraction

from .walks import DriftVariant, dyadic_epsilon

PRESETS = ("speed", "tan-exponent", "coupling-audit", "envelope", "lemma-b",
           "windowed-progress")

# Default scales bound by each preset; None means "no default, keep unset".
_PRESET_DEFAULTS: dict[str, dict] = {
    "speed": {"epsilon": ("0.1",), "n": (1_000_000,), "replicas": 100},
    "tan-exponent": {"epsilon": ("0",),
                     "n": tuple(2 ** k for k in range(12, 19)),
                     "replicas": 200},
    "coupling-audit": {"epsilon": ("0.05", "0.1", "0.2"), "n": (10_000,),
                       "replicas": 1000},
    "envelope": {"epsilon": ("0",), "n": (10_000,), "replicas": 1000},
    # for lemma-b the epsilon list carries the n*eps grid values
    "lemma-b": {"epsilon": ("0.01", "0.1", "0.5"), "n": (10, 100, 1000),
                "replicas": 1},
    "windowed-progress": {"epsilon": ("0.1",), "n": (100_000,), "replicas": 100},
}

_CONFIG_KEYS = ("preset", "epsilon", "n", "m", "replicas", "seed", "variant",
                "cookies", "halfplane_x", "workers", "format", "out")


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    epsilons: tuple[str, ...]
    ns: tuple[int, ...]
    replicas: int
    master_seed: int
    drift_variant: DriftVariant
    cookies_per_site: int
    halfplane_x: int | None
    m: int | None
    workers: int | None
    output_format: str
    out_path: str | None

    def resolved(self) -> dict:
        """Serializable echo of every resolved field."""
        return {
            "preset": self.preset,
            "epsilon": list(self.epsilons),
            "n": list(self.ns),
            "m": self.m,
            "replicas": self.replicas,
            "seed": self.master_seed,
            "variant": self.drift_variant.value,
            "cookies": self.cookies_per_site,
            "halfplane_x": self.halfplane_x,
            "workers": self.workers,
            "format": self.output_format,
            "out": self.out_path,
        }


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="walklab",
        description="Monte Carlo experiments on the 2D excited random walk.")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--epsilon", help="comma-separated drift strengths, each in "
                                     "[0, 1/4); for lemma-b these are the n*eps "
                                     "grid values")
    p.add_argument("--n", help="comma-separated walk lengths")
    p.add_argument("--m", type=int, help="window width for windowed-progress")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--variant", choices=[v.value for v in DriftVariant])
    p.add_argument("--cookies", type=int, help="cookies per site (>= 1)")
    p.add_argument("--halfplane-x", dest="halfplane_x", type=int,
                   help="pre-visit every site with x <= this threshold")
    p.add_argument("--workers", type=int,
                   help="worker processes (WALKLAB_WORKERS overrides)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--config", help="key = value config file")
    return p


def _parse_file(path: str) -> dict:
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                key = key.strip()
                if key not in _CONFIG_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _int(value, key: str) -> int:
    try:
        return int(str(value))
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from exc


def _int_list(value, key: str) -> tuple[int, ...]:
    parts = [s.strip() for s in str(value).split(",") if s.strip()]
    if not parts:
        raise ConfigError(f"{key} list must be nonempty")
    return tuple(_int(s, key) for s in parts)


def _str_list(value, key: str) -> tuple[str, ...]:
    parts = [s.strip() for s in str(value).split(",") if s.strip()]
    if not parts:
        raise ConfigError(f"{key} list must be nonempty")
    return tuple(parts)


def parse_config(argv: list[str] | None = None) -> ExperimentConfig:
    """Resolve flags, optional config file, and preset defaults."""
    args = _build_parser().parse_args(argv)
    file_values = _parse_file(args.config) if args.config else {}

    def pick(flag_value, key: str):
        if flag_value is not None:
            return flag_value
        return file_values.get(key)

    preset = pick(args.preset, "preset")
    if preset is None:
        raise ConfigError("a --preset is required ("
                          + ", ".join(PRESETS) + ")")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    defaults = _PRESET_DEFAULTS[preset]

    eps_raw = pick(args.epsilon, "epsilon")
    epsilons = _str_list(eps_raw, "epsilon") if eps_raw is not None else defaults["epsilon"]
    for e in epsilons:
        try:
            if preset == "lemma-b":
                if Fraction(e) <= 0:
                    raise ValueError("n*eps grid values must be positive")
            else:
                dyadic_epsilon(e)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad epsilon {e!r}: {exc}") from exc

    n_raw = pick(args.n, "n")
    ns = _int_list(n_raw, "n") if n_raw is not None else defaults["n"]
    if any(n < 0 for n in ns):
        raise ConfigError("n values must be nonnegative")

    replicas = _int(pick(args.replicas, "replicas") or defaults["replicas"], "replicas")
    if replicas < 1:
        raise ConfigError("replicas must be >= 1")

    seed_raw = pick(args.seed, "seed")
    master_seed = _int(seed_raw, "seed") if seed_raw is not None else 0

    variant_raw = pick(args.variant, "variant")
    try:
        variant = DriftVariant(variant_raw) if variant_raw else DriftVariant.FRESH_DRIFT
    except ValueError as exc:
        raise ConfigError(f"bad variant {variant_raw!r}") from exc

    cookies_raw = pick(args.cookies, "cookies")
    cookies = _int(cookies_raw, "cookies") if cookies_raw is not None else 1
    if cookies < 1:
        raise ConfigError("cookies must be >= 1")

    half_raw = pick(args.halfplane_x, "halfplane_x")
    halfplane_x = _int(half_raw, "halfplane_x") if half_raw is not None else None

    m_raw = pick(args.m, "m")
    m = _int(m_raw, "m") if m_raw is not None else None
    if m is not None and m < 1:
        raise ConfigError("m must be >= 1")

    workers_raw = pick(args.workers, "workers")
    workers = _int(workers_raw, "workers") if workers_raw is not None else None
    if workers is not None and workers < 1:
        raise ConfigError("workers must be >= 1")

    fmt = pick(args.format, "format") or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"bad format {fmt!r}")

    out = pick(args.out, "out")

    return ExperimentConfig(
        preset=preset, epsilons=tuple(epsilons), ns=tuple(ns),
        replicas=replicas, master_seed=master_seed, drift_variant=variant,
        cookies_per_site=cookies, halfplane_x=halfplane_x, m=m,
        workers=workers, output_format=fmt, out_path=out,
    )
