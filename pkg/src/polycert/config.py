"""Run configuration: one TOML or JSON file per run, schema-validated.

Unknown keys are rejected so typos fail loudly; every random choice is seeded
from the config to keep reruns byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .basis import BasisDictionary, monomial_dictionary, remainder
from .plant import PlantModel, collect_experiment
from .polytope import Polytope, box, scale_facets
from .presets import paper_a2, paper_dictionary, PAPER_A1, PAPER_B
from .synthesis import CertificateSpec, SweepTemplate

THEOREMS = ("1", "2", "p1", "3", "4")
MODES = ("unstructured", "structured", "active_only")

_CERT_BY_THEOREM = {"1": "thm1", "2": "thm2", "p1": "p1", "3": "thm3", "4": "thm4"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    plant: dict = field(default_factory=lambda: {"preset": "paper-sysV"})
    dictionary: dict | None = None
    polytope: dict = field(default_factory=lambda: {"box_radius": 1.0})
    lam: float = 1.0
    h_w: float = 0.0
    theorem: str = "1"
    mode: str = "unstructured"
    T: int = 20
    seed: int = 0
    radius: float = 0.5
    bracket: tuple[float, float] = (0.1, 2.0)
    bisect_tol: float = 5e-3
    sweep_bracket: tuple[float, float] = (0.0, 10.0)
    sweep_tol: float = 1e-2
    sweep_which: str = "e1"
    input_limit: float | None = None
    verify_n: int = 2000
    boundary_frac: float = 0.7
    verify_seed: int = 0
    steps: int = 200
    jobs: int = 1
    out: str = "out"
    reproduce_certificates: list = field(default_factory=lambda: [
        ["1", None], ["3", "unstructured"], ["3", "structured"],
        ["3", "active_only"], ["4", None]])
    reproduce_studies: list = field(default_factory=lambda: ["e1", "e2", "rmax"])
    reproduce_hw: float = 0.03

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ConfigError(f"lam must lie in (0, 1], got {self.lam}")
        if self.h_w < 0:
            raise ConfigError("h_w must be nonnegative")
        if self.theorem not in THEOREMS:
            raise ConfigError(f"theorem must be one of {THEOREMS}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.radius <= 0:
            raise ConfigError("radius must be positive")
        if self.sweep_which not in ("e1", "e2"):
            raise ConfigError("sweep_which must be 'e1' or 'e2'")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        for key in ("bracket", "sweep_bracket"):
            setattr(cfg, key, tuple(float(v) for v in getattr(cfg, key)))
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        if str(path).endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as fh:
                return cls.from_dict(tomllib.load(fh))
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @property
    def certificate(self) -> str:
        return _CERT_BY_THEOREM[self.theorem]


def build_dictionary(cfg: RunConfig) -> BasisDictionary:
    if cfg.dictionary is not None:
        return monomial_dictionary(cfg.dictionary["monomials"],
                                   int(cfg.dictionary["n"]))
    if cfg.plant.get("preset") == "paper-sysV":
        return paper_dictionary()
    raise ConfigError("explicit plants need a dictionary entry")


def build_plant(cfg: RunConfig, e1: float | None = None,
                e2: float | None = None) -> PlantModel:
    rem = remainder(build_dictionary(cfg))
    p = cfg.plant
    if p.get("preset") == "paper-sysV":
        e1 = p.get("e1", -0.01) if e1 is None else e1
        e2 = p.get("e2", -0.005) if e2 is None else e2
        return PlantModel(A1=PAPER_A1, A2=paper_a2(e1, e2), B=PAPER_B,
                          remainder=rem, h_w=cfg.h_w)
    if "preset" in p:
        raise ConfigError(f"unknown plant preset {p['preset']!r}")
    return PlantModel(A1=np.array(p["A1"], dtype=float),
                      A2=np.array(p["A2"], dtype=float),
                      B=np.array(p["B"], dtype=float),
                      remainder=rem, h_w=cfg.h_w)


def build_template_polytope(cfg: RunConfig) -> Polytope:
    p = cfg.polytope
    if "box_radius" in p:
        n = build_dictionary(cfg).n
        return box([float(p["box_radius"])] * n)
    return Polytope(np.array(p["F"], dtype=float), np.array(p["g"], dtype=float),
                    float(p.get("tol", 1e-9)))


def input_polytope_of(cfg: RunConfig):
    if cfg.input_limit is None:
        return None
    plant = build_plant(cfg)
    m = plant.m
    F_u = np.vstack([np.eye(m), -np.eye(m)])
    g_u = np.full(2 * m, float(cfg.input_limit))
    return F_u, g_u


def build_spec(cfg: RunConfig, radius: float | None = None) -> tuple[CertificateSpec, PlantModel]:
    plant = build_plant(cfg)
    template = build_template_polytope(cfg)
    data = collect_experiment(plant, cfg.T, polytope=template, seed=cfg.seed)
    r = cfg.radius if radius is None else radius
    spec = CertificateSpec(
        polytope=scale_facets(template, r), data=data, remainder=plant.remainder,
        lam=cfg.lam, input_polytope=input_polytope_of(cfg))
    return spec, plant


def build_sweep_template(cfg: RunConfig) -> SweepTemplate:
    template = build_template_polytope(cfg)

    def builder(e1: float, e2: float) -> PlantModel:
        return build_plant(cfg, e1=e1, e2=e2)

    p = cfg.plant
    return SweepTemplate(
        plant_builder=builder,
        e1=p.get("e1", -0.01), e2=p.get("e2", -0.005),
        polytope=scale_facets(template, cfg.radius),
        T=cfg.T, seed=cfg.seed, lam=cfg.lam,
        input_polytope=input_polytope_of(cfg))
