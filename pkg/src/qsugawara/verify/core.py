"""Check registry, run settings and results."""

from __future__ import annotations

import fnmatch
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..qcalc import Deformation

VARIANTS = ("as_printed", "rederived")

# constants the classical displays are compared against (not runtime types)
EXPECTED_CONSTANTS: Dict[str, float] = {
    "c_N1": 1.5,  # one boson plus one Majorana fermion
    "h_G": 1.5,  # conformal weight of the supercurrent
}


@dataclass(frozen=True)
class Settings:
    epsilon: float = 0.15
    D: int = 8
    K: int = 40
    M: int = 2
    samples: int = 5
    seed: int = 7
    tolerance: Optional[float] = None
    ratio: float = 0.5

    def deformation(self, epsilon: Optional[float] = None) -> Deformation:
        return Deformation(self.epsilon if epsilon is None else epsilon, n_max=max(64, self.K + 8))

    def rng(self, check_id: str) -> np.random.Generator:
        # stable per-check stream: independent of which other checks run
        salt = sum((i + 1) * ord(c) for i, c in enumerate(check_id))
        return np.random.default_rng([self.seed, salt])

    def spectral_points(self, check_id: str, count: Optional[int] = None) -> List[complex]:
        """Seeded points w with 0.6 <= |w| <= 1."""
        rng = self.rng(check_id)
        n = self.samples if count is None else count
        rho = rng.uniform(0.6, 1.0, n)
        theta = rng.uniform(0, 2 * np.pi, n)
        return list(rho * np.exp(1j * theta))

    def outer_point(self, w: complex, check_id: str, index: int) -> complex:
        """z with |w/z| = ratio, seeded phase."""
        phase = self.rng(f"{check_id}/{index}").uniform(0, 2 * np.pi)
        return w / self.ratio * np.exp(1j * phase)


@dataclass
class Outcome:
    """What a check body reports."""

    error: float
    diagnostics: List[dict] = field(default_factory=list)
    guard_band: str = "full basis"
    params: Dict[str, object] = field(default_factory=dict)
    notes: str = ""
    tolerance: Optional[float] = None


@dataclass
class CheckResult:
    id: str
    variant: str
    anchor: str
    params: Dict[str, object]
    max_error: float
    tolerance: float
    passed: bool
    guard_band: str
    diagnostics: List[dict]
    notes: str
    runtime_ms: float

    def to_dict(self) -> dict:
        return asdict(self)


Body = Callable[[Settings, str], Outcome]


@dataclass(frozen=True)
class CheckSpec:
    id: str
    anchor: str
    summary: str
    kind: str  # pole | exchange | matrix | limit | exact
    tolerance: float
    body: Body
    differs: bool = False  # as_printed and rederived differ
    deformed: bool = True  # needs epsilon != 0
    params: Dict[str, object] = field(default_factory=dict)


REGISTRY: Dict[str, CheckSpec] = {}


def register(id: str, anchor: str, summary: str, kind: str, tolerance: float, differs: bool = False,
             deformed: bool = True, **params):
    def deco(fn: Body) -> Body:
        if id in REGISTRY:
            raise ValueError(f"duplicate check id {id!r}")
        REGISTRY[id] = CheckSpec(id, anchor, summary, kind, tolerance, fn, differs, deformed, dict(params))
        return fn

    return deco


def _load():
    # importing the check modules fills the registry
    from . import checks_abelian, checks_n2, checks_qcalc, checks_su2, checks_sun  # noqa: F401


def registry() -> Dict[str, CheckSpec]:
    if not REGISTRY:
        _load()
    return REGISTRY


def select(patterns: Sequence[str] = ("*",)) -> List[CheckSpec]:
    reg = registry()
    chosen = [spec for cid, spec in reg.items() if any(fnmatch.fnmatchcase(cid, p) for p in patterns)]
    return sorted(chosen, key=lambda s: s.id)


class UnknownCheck(KeyError):
    pass


def run_check(check_id: str, variant: str = "rederived", settings: Settings = Settings()) -> CheckResult:
    reg = registry()
    if check_id not in reg:
        raise UnknownCheck(check_id)
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    spec = reg[check_id]
    if spec.deformed and settings.epsilon == 0:
        raise ValueError(f"{check_id} needs a nonzero deformation")
    t0 = time.perf_counter()
    out = spec.body(settings, variant)
    runtime = (time.perf_counter() - t0) * 1e3
    tol = settings.tolerance if settings.tolerance is not None else (
        out.tolerance if out.tolerance is not None else spec.tolerance)
    params = {"epsilon": settings.epsilon, "D": settings.D, "K": settings.K, "M": settings.M,
              "samples": settings.samples, "seed": settings.seed, **spec.params, **out.params}
    err = float(out.error)
    return CheckResult(check_id, variant, spec.anchor, params, err, tol, bool(err <= tol), out.guard_band,
                       out.diagnostics, out.notes, runtime)
