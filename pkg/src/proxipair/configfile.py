"""Problem configuration: INI-style files with positional validation errors.

A config names the ambient dimension, the two sets, one mapping family with
its parameters and declared class, solver tolerances, and the optional
stability and oracle stages.  Values are validated at load time; every
complaint carries the file name, the line of the offending key, and the
section/key path.  The full grammar is documented in the README.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Ball, Box, ConvexSet, GeometryError, Polytope
from .mappings import (
    AnchoredAffine,
    CertificationError,
    CompositeAffine,
    ConstantProximal,
    CyclicMap,
    MapClass,
    SinePartner,
)

__all__ = ["ConfigError", "ProblemConfig", "SolverSettings", "StabilitySettings",
           "OracleSettings", "GapSettings", "load_config", "MAP_FAMILIES"]

MAP_FAMILIES = ("anchored_affine", "sine_partner", "constant_proximal", "composite_affine")
SET_KINDS = ("box", "ball", "polytope")
_KEY_RE = re.compile(r"^\s*([^=:#;\[\]][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[(?P<name>[^\]]+)\]")


class ConfigError(ValueError):
    """Malformed or invalid configuration; message carries file:line."""


@dataclass
class GapSettings:
    tol: float = 1e-10
    max_iter: int = 10_000


@dataclass
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 100_000
    schedule: Optional[list[int]] = None
    inner_tol: float = 1e-8
    outer_tol: float = 1e-6
    max_inner: int = 200_000
    anchor: Optional[tuple[np.ndarray, np.ndarray]] = None
    start: Optional[tuple[np.ndarray, np.ndarray]] = None


@dataclass
class StabilitySettings:
    epsilons: list[float]
    n_samples: int
    kinds: list[str]


@dataclass
class OracleSettings:
    resolution: float
    threshold: float


@dataclass
class ProblemConfig:
    path: str
    dimension: int
    seed: int
    output_dir: Optional[str]
    set_a: ConvexSet
    set_b: ConvexSet
    map_family: str
    cyclic_map: CyclicMap
    gap_settings: GapSettings
    solver: SolverSettings
    stability: Optional[StabilitySettings]
    oracle: Optional[OracleSettings]
    map_params: dict = field(default_factory=dict)


class _Reader:
    """configparser wrapper tracking key line numbers for error messages."""

    def __init__(self, path: str):
        self.path = path
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        parser = configparser.ConfigParser(
            inline_comment_prefixes=("#",), interpolation=None
        )
        try:
            parser.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        self.parser = parser
        self.lines: dict[tuple[str, Optional[str]], int] = {}
        section = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            m = _SECTION_RE.match(line)
            if m:
                section = m.group("name").strip()
                self.lines[(section, None)] = lineno
                continue
            if section is None:
                continue
            k = _KEY_RE.match(line)
            if k:
                self.lines[(section, k.group(1).strip().lower())] = lineno

    def fail(self, section: str, key: Optional[str], msg: str):
        line = self.lines.get((section, key)) or self.lines.get((section, None), 0)
        where = f"[{section}]" + (f" {key}" if key else "")
        raise ConfigError(f"{self.path}:{line}: {where}: {msg}")

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str, default=None, required=False) -> Optional[str]:
        if not self.parser.has_section(section):
            if required:
                raise ConfigError(f"{self.path}: missing required section [{section}]")
            return default
        if not self.parser.has_option(section, key):
            if required:
                self.fail(section, None, f"missing required key {key!r}")
            return default
        return self.parser.get(section, key).strip()

    def get_float(self, section, key, default=None, required=False):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self.fail(section, key, f"expected a number, got {raw!r}")

    def get_int(self, section, key, default=None, required=False):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.fail(section, key, f"expected an integer, got {raw!r}")

    def get_str(self, section, key, default=None, required=False, choices=None):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return default
        if choices is not None and raw not in choices:
            self.fail(section, key, f"expected one of {list(choices)}, got {raw!r}")
        return raw

    def get_floats(self, section, key, default=None, required=False):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return default
        try:
            return [float(tok) for tok in re.split(r"[,\s]+", raw) if tok]
        except ValueError:
            self.fail(section, key, f"expected numbers, got {raw!r}")

    def get_vector(self, section, key, dim, default=None, required=False):
        vals = self.get_floats(section, key, default=None, required=required)
        if vals is None:
            return default
        if len(vals) != dim:
            self.fail(section, key, f"expected {dim} coordinates, got {len(vals)}")
        return np.array(vals)

    def get_matrix(self, section, key, dim, required=False):
        raw = self.raw(section, key, required=required)
        if raw is None:
            return None
        rows = []
        for part in raw.split(";"):
            part = part.strip()
            if not part:
                continue
            try:
                rows.append([float(tok) for tok in re.split(r"[,\s]+", part) if tok])
            except ValueError:
                self.fail(section, key, f"expected numeric matrix rows, got {part!r}")
        mat = np.array(rows)
        if mat.shape != (dim, dim):
            self.fail(section, key, f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        return mat


def _parse_set(r: _Reader, section: str, dim: int) -> ConvexSet:
    kind = r.get_str(section, "kind", required=True, choices=SET_KINDS)
    try:
        if kind == "box":
            lo = r.get_vector(section, "lo", dim, required=True)
            hi = r.get_vector(section, "hi", dim, required=True)
            return Box(lo, hi)
        if kind == "ball":
            center = r.get_vector(section, "center", dim, required=True)
            radius = r.get_float(section, "radius", required=True)
            return Ball(center, radius)
        raw = r.raw(section, "halfspaces", required=True)
        normals, offsets = [], []
        for part in raw.split(";"):
            part = part.strip()
            if not part:
                continue
            if "<=" not in part:
                r.fail(section, "halfspaces",
                       f"each entry must read 'n1 .. nd <= offset', got {part!r}")
            left, right = part.split("<=", 1)
            normal = [float(tok) for tok in re.split(r"[,\s]+", left.strip()) if tok]
            if len(normal) != dim:
                r.fail(section, "halfspaces",
                       f"normal {left.strip()!r} has {len(normal)} coords, expected {dim}")
            normals.append(normal)
            offsets.append(float(right))
        return Polytope(np.array(normals), np.array(offsets))
    except GeometryError as exc:
        r.fail(section, "kind", str(exc))


def _parse_declared_class(r: _Reader, lam: Optional[float]) -> MapClass:
    kind = r.get_str("map", "declared_class", required=True,
                     choices=("contraction", "nonexpansive"))
    if kind == "contraction":
        if lam is None:
            r.fail("map", "lambda", "contraction class requires lambda")
        if not (0.0 < lam < 1.0):
            r.fail("map", "lambda", f"must lie strictly between 0 and 1, got {lam}")
        return MapClass.contraction(lam)
    return MapClass.nonexpansive()


def _parse_map(r: _Reader, dim: int, set_a: ConvexSet, set_b: ConvexSet):
    family = r.get_str("map", "family", required=True, choices=MAP_FAMILIES)
    lam = r.get_float("map", "lambda")
    params: dict = {"family": family}
    try:
        if family == "sine_partner":
            decl = _parse_declared_class(r, lam)
            if decl.kind != "nonexpansive":
                r.fail("map", "declared_class", "sine_partner is a nonexpansive family")
            for name, got, want in (("set_a", set_a, SinePartner.DOMAIN_A),
                                    ("set_b", set_b, SinePartner.DOMAIN_B)):
                if not (isinstance(got, Box) and np.allclose(got.lo, want.lo)
                        and np.allclose(got.hi, want.hi)):
                    r.fail("map", "family",
                           f"sine_partner is defined only on its stacked unit boxes; "
                           f"[{name}] must be the box {want.lo.tolist()}..{want.hi.tolist()}")
            return SinePartner(), params
        if family == "anchored_affine":
            a_star = r.get_vector("map", "a_star", dim, required=True)
            b_star = r.get_vector("map", "b_star", dim, required=True)
            if lam is None:
                r.fail("map", "lambda", "anchored_affine requires lambda")
            if not (0.0 < lam < 1.0):
                r.fail("map", "lambda", f"must lie strictly between 0 and 1, got {lam}")
            iso_ab = r.get_matrix("map", "iso_ab", dim, required=True)
            iso_ba = r.get_matrix("map", "iso_ba", dim, required=True)
            decl = r.get_str("map", "declared_class", default="contraction",
                             choices=("contraction",))
            params.update(lam=lam)
            return AnchoredAffine(a_star, b_star, lam, iso_ab, iso_ba,
                                  certify=(set_a, set_b)), params
        if family == "constant_proximal":
            a_star = r.get_vector("map", "a_star", dim, required=True)
            b_star = r.get_vector("map", "b_star", dim, required=True)
            decl = _parse_declared_class(r, lam)
            return ConstantProximal(a_star, b_star, declared_class=decl), params
        # composite_affine
        decl = _parse_declared_class(r, lam)
        if decl.kind == "contraction":
            params.update(lam=lam)
        pieces = {}
        for key in ("bias_ab", "bias_ba"):
            pieces[key] = r.get_vector("map", key, dim, required=True)
        for key in ("w_first_ab", "w_second_ab", "w_first_ba", "w_second_ba"):
            pieces[key] = r.get_matrix("map", key, dim, required=True)
        return CompositeAffine(pieces["bias_ab"], pieces["w_first_ab"],
                               pieces["w_second_ab"], pieces["bias_ba"],
                               pieces["w_first_ba"], pieces["w_second_ba"],
                               declared_class=decl, certify=(set_a, set_b)), params
    except (CertificationError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        r.fail("map", "family", str(exc))


def _parse_schedule(r: _Reader) -> Optional[list[int]]:
    raw = r.raw("solver", "schedule")
    if raw is None:
        return None
    if ".." in raw:
        lo_s, hi_s = raw.split("..", 1)
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError:
            r.fail("solver", "schedule", f"expected 'start..end' integers, got {raw!r}")
        if lo < 2 or hi < lo:
            r.fail("solver", "schedule", "doubling range needs 2 <= start <= end")
        out = []
        n = lo
        while n <= hi:
            out.append(n)
            n *= 2
        return out
    try:
        vals = [int(tok) for tok in re.split(r"[,\s]+", raw) if tok]
    except ValueError:
        r.fail("solver", "schedule", f"expected integers, got {raw!r}")
    if any(n < 2 for n in vals) or any(m <= n for n, m in zip(vals, vals[1:])):
        r.fail("solver", "schedule", "must be strictly increasing integers >= 2")
    return vals


def _parse_pair(r: _Reader, section: str, key_a: str, key_b: str, dim: int):
    a = r.get_vector(section, key_a, dim)
    b = r.get_vector(section, key_b, dim)
    if (a is None) != (b is None):
        r.fail(section, key_a if a is None else key_b,
               f"{key_a} and {key_b} must be given together")
    return None if a is None else (a, b)


def load_config(path: str) -> ProblemConfig:
    """Parse and validate a problem configuration file."""
    r = _Reader(path)
    for section in ("problem", "set_a", "set_b", "map", "solver"):
        if not r.has(section):
            raise ConfigError(f"{path}: missing required section [{section}]")

    dim = r.get_int("problem", "dimension", required=True)
    if dim < 1:
        r.fail("problem", "dimension", "must be >= 1")
    seed = r.get_int("problem", "seed", default=0)
    output_dir = r.get_str("problem", "output_dir")

    set_a = _parse_set(r, "set_a", dim)
    set_b = _parse_set(r, "set_b", dim)
    cyclic_map, params = _parse_map(r, dim, set_a, set_b)

    gap_settings = GapSettings(
        tol=r.get_float("gap", "tol", default=1e-10),
        max_iter=r.get_int("gap", "max_iter", default=10_000),
    )
    if gap_settings.tol <= 0:
        r.fail("gap", "tol", "must be positive")

    solver = SolverSettings(
        tol=r.get_float("solver", "tol", default=1e-8),
        max_iter=r.get_int("solver", "max_iter", default=100_000),
        schedule=_parse_schedule(r),
        inner_tol=r.get_float("solver", "inner_tol", default=1e-8),
        outer_tol=r.get_float("solver", "outer_tol", default=1e-6),
        max_inner=r.get_int("solver", "max_inner", default=200_000),
        anchor=_parse_pair(r, "solver", "anchor_a", "anchor_b", dim),
        start=_parse_pair(r, "solver", "start_a", "start_b", dim),
    )
    for key in ("tol", "inner_tol", "outer_tol"):
        if getattr(solver, key) <= 0:
            r.fail("solver", key, "must be positive")
    if solver.start is not None:
        for key, vec, s in (("start_a", solver.start[0], set_a),
                            ("start_b", solver.start[1], set_b)):
            if not s.contains(vec, tol=1e-7):
                r.fail("solver", key, "start point lies outside its set")
    if solver.anchor is not None:
        for key, vec, s in (("anchor_a", solver.anchor[0], set_a),
                            ("anchor_b", solver.anchor[1], set_b)):
            if not s.contains(vec, tol=1e-7):
                r.fail("solver", key, "anchor point lies outside its set")
    if cyclic_map.declared_class.kind == "nonexpansive" and solver.schedule is None:
        solver.schedule = [2 * 2**k for k in range(10)]

    stability = None
    if r.has("stability"):
        epsilons = r.get_floats("stability", "epsilons", required=True)
        if any(e <= 0 for e in epsilons):
            r.fail("stability", "epsilons", "all epsilons must be positive")
        kinds = [tok for tok in re.split(r"[,\s]+", r.raw("stability", "kinds", required=True)) if tok]
        from .stability import BOUND_KINDS
        for k in kinds:
            if k not in BOUND_KINDS:
                r.fail("stability", "kinds", f"unknown kind {k!r}; expected subset of {BOUND_KINDS}")
        if "contraction" in kinds and cyclic_map.declared_class.kind != "contraction":
            r.fail("stability", "kinds",
                   "the contraction bound needs a declared contraction map")
        n_samples = r.get_int("stability", "n_samples", default=1000)
        if n_samples < 1:
            r.fail("stability", "n_samples", "must be >= 1")
        stability = StabilitySettings(epsilons=epsilons, n_samples=n_samples, kinds=kinds)

    oracle = None
    if r.has("oracle"):
        resolution = r.get_float("oracle", "resolution", required=True)
        if resolution <= 0:
            r.fail("oracle", "resolution", "must be positive")
        threshold = r.get_float("oracle", "threshold", default=resolution)
        oracle = OracleSettings(resolution=resolution, threshold=threshold)

    return ProblemConfig(
        path=path,
        dimension=dim,
        seed=seed,
        output_dir=output_dir,
        set_a=set_a,
        set_b=set_b,
        map_family=params["family"],
        cyclic_map=cyclic_map,
        gap_settings=gap_settings,
        solver=solver,
        stability=stability,
        oracle=oracle,
        map_params=params,
    )
