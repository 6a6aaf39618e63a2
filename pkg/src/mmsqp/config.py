"""Flat key=value run configs.

One ``key = value`` pair per line, ``#`` starts a comment, blank lines are
ignored.  Polynomial values go through the expression parser; gradient
Lipschitz constants are certified on the declared trust box unless a
``lipschitz.*`` key overrides them.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .methods import METHODS
from .mmp import StopCriteria
from .poly import NlpProblem, PolynomialParseError, parse_polynomial
from .problems import build_problem
from .sets import Box, EuclideanBall, NonnegOrthant, Simplex, SimplexCap, SimpleSet, WholeSpace


class ConfigError(ValueError):
    """Malformed run config; message carries the offending line or key."""


@dataclass
class RunConfig:
    """Everything one solver run needs, plus bookkeeping for reports."""

    name: str
    source: str  # file path or "builtin"
    method: str
    x0: np.ndarray
    beta0: float = 1.0
    delta: float = 1.0
    lam: Optional[float] = None
    lam_prime: Optional[float] = None
    eps_sub: float = 1e-10
    feas_tol: float = 0.0
    tol_step: float = 1e-9
    max_iters: int = 100_000
    divergence_radius: float = 1e6
    seed: int = 0

    def stop_criteria(self) -> StopCriteria:
        return StopCriteria(self.tol_step, self.max_iters, self.divergence_radius)

    def solver_params(self) -> dict:
        return {
            "beta0": self.beta0,
            "delta": self.delta,
            "lam": self.lam,
            "lam_prime": self.lam_prime,
            "eps_sub": self.eps_sub,
            "feas_tol": self.feas_tol,
        }


_KNOWN_KEYS = {
    "name", "dimension", "objective", "q_set", "q_params", "trust_box", "method",
    "beta0", "delta", "lambda", "lambda_prime", "tol_step", "max_iters", "x0",
    "eps_sub", "feas_tol", "divergence_radius", "seed",
}


def _parse_floats(value: str, key: str, line: int) -> list[float]:
    parts = [p for chunk in value.split(",") for p in chunk.split()]
    out = []
    for p in parts:
        try:
            out.append(float(p))
        except ValueError:
            raise ConfigError(f"line {line}: key {key!r} has a non-numeric entry {p!r}") from None
    return out


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    table: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in table:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {table[key][1]})")
        table[key] = (value, lineno)
    return table


def _check_keys(table: dict[str, tuple[str, int]]) -> None:
    for key, (_, lineno) in table.items():
        if key in _KNOWN_KEYS:
            continue
        if key.startswith("constraint.") and key[len("constraint."):].isdigit():
            continue
        if key == "lipschitz.objective":
            continue
        if key.startswith("lipschitz.constraint.") and key[len("lipschitz.constraint."):].isdigit():
            continue
        raise ConfigError(f"line {lineno}: unknown key {key!r}")


def _simple_set_from_config(q_set: str, q_params: list[float], dimension: int, line: int) -> SimpleSet:
    q_set = q_set.lower()
    if q_set == "wholespace":
        return WholeSpace()
    if q_set == "nonneg":
        return NonnegOrthant()
    if q_set == "box":
        if len(q_params) == 2:
            lo = np.full(dimension, q_params[0])
            hi = np.full(dimension, q_params[1])
        elif len(q_params) == 2 * dimension:
            lo = np.array(q_params[0::2])
            hi = np.array(q_params[1::2])
        else:
            raise ConfigError(f"line {line}: box q_params needs 2 or {2 * dimension} numbers")
        return Box(lo, hi)
    if q_set == "ball":
        if len(q_params) != dimension + 1:
            raise ConfigError(f"line {line}: ball q_params needs {dimension + 1} numbers (center, radius)")
        return EuclideanBall(np.array(q_params[:-1]), q_params[-1])
    if q_set == "simplex":
        if len(q_params) != 1:
            raise ConfigError(f"line {line}: simplex q_params needs 1 number (scale)")
        return Simplex(q_params[0])
    if q_set == "simplexcap":
        if len(q_params) != 1:
            raise ConfigError(f"line {line}: simplexcap q_params needs 1 number (scale)")
        return SimplexCap(q_params[0])
    raise ConfigError(f"line {line}: unknown q_set {q_set!r}")


def parse_config_text(text: str, source: str = "<string>") -> tuple[RunConfig, NlpProblem]:
    table = _parse_lines(text)
    _check_keys(table)

    def need(key: str) -> tuple[str, int]:
        if key not in table:
            raise ConfigError(f"missing required key {key!r}")
        return table[key]

    def get_float(key: str, default: float) -> float:
        if key not in table:
            return default
        value, lineno = table[key]
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: key {key!r} must be a number") from None

    def get_int(key: str, default: int) -> int:
        if key not in table:
            return default
        value, lineno = table[key]
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: key {key!r} must be an integer") from None

    value, lineno = need("dimension")
    try:
        dimension = int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: dimension must be an integer") from None
    if dimension < 1:
        raise ConfigError(f"line {lineno}: dimension must be positive")

    method, lineno = need("method")
    if method not in METHODS:
        raise ConfigError(f"line {lineno}: unknown method {method!r} (expected one of {', '.join(METHODS)})")

    # contiguous constraint.1 .. constraint.m
    con_keys = sorted(
        (int(k[len("constraint."):]), k) for k in table if k.startswith("constraint.")
    )
    for expected, (idx, key) in enumerate(con_keys, start=1):
        if idx != expected:
            raise ConfigError(f"constraint keys must be numbered 1..m without gaps; found {key!r}")

    if "trust_box" in table:
        tvalue, tline = table["trust_box"]
        tb = _parse_floats(tvalue, "trust_box", tline)
        if len(tb) == 2:
            lo = np.full(dimension, tb[0])
            hi = np.full(dimension, tb[1])
        elif len(tb) == 2 * dimension:
            lo = np.array(tb[0::2])
            hi = np.array(tb[1::2])
        else:
            raise ConfigError(f"line {tline}: trust_box needs 2 or {2 * dimension} numbers")
        if np.any(lo >= hi):
            raise ConfigError(f"line {tline}: trust_box lower bounds must be below upper bounds")
    else:
        lo = np.full(dimension, -10.0)
        hi = np.full(dimension, 10.0)

    q_params: list[float] = []
    if "q_params" in table:
        q_params = _parse_floats(table["q_params"][0], "q_params", table["q_params"][1])
    q_set_value, q_line = table.get("q_set", ("wholespace", 0))
    simple_set = _simple_set_from_config(q_set_value, q_params, dimension, q_line)

    overrides: dict[str, float] = {}
    if "lipschitz.objective" in table:
        overrides["objective"] = get_float("lipschitz.objective", 0.0)
    valid_indices = {idx for idx, _ in con_keys}
    for key, (_, lineno) in table.items():
        if not key.startswith("lipschitz.constraint."):
            continue
        idx = int(key[len("lipschitz.constraint."):])
        if idx not in valid_indices:
            raise ConfigError(f"line {lineno}: {key!r} has no matching constraint.{idx}")
        overrides[f"constraint.{idx}"] = get_float(key, 0.0)

    objective_text, obj_line = need("objective")
    constraint_texts = [table[key][0] for _, key in con_keys]
    # validate each expression separately so errors name the offending key
    for key in ["objective"] + [key for _, key in con_keys]:
        text_value, key_line = table[key]
        try:
            parse_polynomial(text_value, dimension)
        except PolynomialParseError as err:
            raise ConfigError(f"key {key!r} (line {key_line}): {err}") from None
    problem = build_problem(
        dimension, objective_text, constraint_texts, simple_set, lo, hi, overrides,
    )

    x0_value, x0_line = need("x0")
    x0 = np.array(_parse_floats(x0_value, "x0", x0_line))
    if x0.size != dimension:
        raise ConfigError(f"line {x0_line}: x0 has {x0.size} entries, expected {dimension}")

    name = table.get("name", (Path(source).stem if source != "<string>" else "run", 0))[0]
    cfg = RunConfig(
        name=name,
        source=source,
        method=method,
        x0=x0,
        beta0=get_float("beta0", 1.0),
        delta=get_float("delta", 1.0),
        lam=get_float("lambda", None) if "lambda" in table else None,
        lam_prime=get_float("lambda_prime", None) if "lambda_prime" in table else None,
        eps_sub=get_float("eps_sub", 1e-10),
        feas_tol=get_float("feas_tol", 0.0),
        tol_step=get_float("tol_step", 1e-9),
        max_iters=get_int("max_iters", 100_000),
        divergence_radius=get_float("divergence_radius", 1e6),
        seed=get_int("seed", 0),
    )
    return cfg, problem


def load_config(path) -> tuple[RunConfig, NlpProblem]:
    """Read and parse a run config file (UTF-8)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config_text(text, source=str(path))
