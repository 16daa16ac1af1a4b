"""JSON run configuration with cross-field validation.

Schema (all blocks optional except ``grid``)::

    {
      "grid": {"N": 1, "G": 48, "L": 10.0, "L_mu": 10.0, "hbar": 1.0, "omega": 1.0},
      "state": {"kind": "coherent", "alpha": [1.0, 0.0]},
      "hamiltonian": {"preset": "harmonic" | "kerr" | "anharmonic" | "gaussian" | "zero",
                      "chi": 1.0, "quartic": 0.1, "width": 1.0, "amplitude": 1.0,
                      "terms": [[j, k, re, im], ...],        # a^dagger^j a^k, normal order
                      "classical": [[j, k, coeff], ...],     # x^j p^k symbol
                      "n_max": 20},
      "evolve": {"ordering": "symmetric", "method": "distributional", "dt": 0.01,
                 "t_final": 1.0, "cadence": 10, "snapshot_cadence": 50,
                 "norm_tol": 1e-6, "herm_tol": 1e-6, "bound_tol": 1e-6},
      "oracle": {"n_max": 20, "methods": ["distributional"], "tolerance": {"distributional": 1e-4}},
      "hbar_scan": {"hbars": [0.4, 0.2, 0.1]},
      "compare": {"a": "runA", "b": "runB"},
      "convert": {"input": "x.chkn", "to": "wigner", "format": "csv"},
      "output": {"dir": "out", "formats": ["bin", "csv"]}
    }

``state`` may be a list with one entry per mode. ``terms`` and ``classical``
replace ``preset`` when present.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .charfn import StateSpec
from .evolution import RhsMethod
from .grid import Ordering, PhaseGrid, make_grid
from .hamiltonian import GridSampled, PolyHamiltonian, XPPoly

PRESETS = ("harmonic", "kerr", "anharmonic", "gaussian", "zero")
FORMATS = ("bin", "csv")


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


def _num(block: dict, key: str, default=None, positive: bool = False) -> float:
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"missing required field {key!r}")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{key} must be positive")
    return value


@dataclass
class GridConfig:
    N: int = 1
    G: int = 48
    L: float = 10.0
    L_mu: float | None = None
    hbar: float = 1.0
    omega: float = 1.0

    @classmethod
    def parse(cls, block: dict) -> "GridConfig":
        if not isinstance(block, dict):
            raise ConfigError("grid block must be an object")
        n = block.get("N", 1)
        g = block.get("G", 48)
        if not isinstance(n, int) or n not in (1, 2):
            raise ConfigError("grid.N must be 1 or 2")
        if not isinstance(g, int) or g < 4:
            raise ConfigError("grid.G must be an integer >= 4")
        if g % 2:
            raise ConfigError("grid.G must be even")
        L = _num(block, "L", 10.0, positive=True)
        L_mu = _num(block, "L_mu", L, positive=True)
        return cls(n, g, L, L_mu, _num(block, "hbar", 1.0, positive=True),
                   _num(block, "omega", 1.0, positive=True))

    def build(self) -> PhaseGrid:
        return make_grid(self.N, self.L, self.L_mu, self.G, self.hbar, self.omega)


@dataclass
class HamiltonianConfig:
    preset: str = "harmonic"
    chi: float = 1.0
    quartic: float = 0.1
    width: float = 1.0
    amplitude: float = 1.0
    terms: list | None = None
    classical: list | None = None
    n_max: int = 20

    @classmethod
    def parse(cls, block: dict) -> "HamiltonianConfig":
        if not isinstance(block, dict):
            raise ConfigError("hamiltonian block must be an object")
        preset = block.get("preset", "harmonic")
        if preset not in PRESETS:
            raise ConfigError(f"hamiltonian.preset must be one of {PRESETS}")
        n_max = block.get("n_max", 20)
        if not isinstance(n_max, int) or not 2 <= n_max <= 64:
            raise ConfigError("hamiltonian.n_max must be an integer in [2, 64]")
        out = cls(preset, _num(block, "chi", 1.0), _num(block, "quartic", 0.1),
                  _num(block, "width", 1.0, positive=True), _num(block, "amplitude", 1.0),
                  block.get("terms"), block.get("classical"), n_max)
        try:
            if out.terms is not None:
                ham = PolyHamiltonian(out.terms)
                if not ham.is_hermitian():
                    raise ConfigError("hamiltonian.terms do not form a Hermitian operator")
            if out.classical is not None:
                if not XPPoly(out.classical).is_real():
                    raise ConfigError("hamiltonian.classical must be real")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed hamiltonian terms: {exc}") from None
        return out

    @property
    def is_polynomial(self) -> bool:
        return self.terms is not None or self.classical is not None or self.preset != "gaussian"

    def operator(self, hbar: float, omega: float) -> PolyHamiltonian:
        """Quantum Hamiltonian; a classical symbol is Weyl-quantised."""
        if self.terms is not None:
            return PolyHamiltonian(self.terms)
        if self.classical is not None:
            return PolyHamiltonian.from_xp(XPPoly(self.classical), hbar, omega)
        if self.preset == "harmonic":
            return PolyHamiltonian.harmonic(hbar, omega)
        if self.preset == "kerr":
            return PolyHamiltonian.kerr(self.chi)
        if self.preset == "anharmonic":
            return PolyHamiltonian.anharmonic(self.quartic, hbar, omega)
        if self.preset == "zero":
            return PolyHamiltonian()
        raise ConfigError("the gaussian preset has no polynomial operator form")

    def symbol(self, hbar: float, omega: float) -> XPPoly:
        if self.classical is not None:
            return XPPoly(self.classical)
        return self.operator(hbar, omega).weyl_symbol(hbar, omega).cleaned()


@dataclass
class EvolveBlock:
    ordering: str = "symmetric"
    method: str = RhsMethod.DISTRIBUTIONAL
    dt: float = 0.01
    t_final: float = 1.0
    cadence: int = 10
    snapshot_cadence: int | None = None
    norm_tol: float = 1e-6
    herm_tol: float = 1e-6
    bound_tol: float = 1e-6

    @classmethod
    def parse(cls, block: dict) -> "EvolveBlock":
        if not isinstance(block, dict):
            raise ConfigError("evolve block must be an object")
        ordering = block.get("ordering", "symmetric")
        if ordering not in [o.value for o in Ordering]:
            raise ConfigError(f"evolve.ordering {ordering!r} is not a valid ordering")
        method = block.get("method", RhsMethod.DISTRIBUTIONAL)
        if method not in RhsMethod.ALL:
            raise ConfigError(f"evolve.method must be one of {RhsMethod.ALL}")
        dt = _num(block, "dt", 0.01)
        t_final = _num(block, "t_final", 1.0)
        if dt < 0 or t_final < 0:
            raise ConfigError("evolve.dt and evolve.t_final must be non-negative")
        if dt == 0 and t_final > 0:
            raise ConfigError("evolve.dt must be positive when t_final > 0")
        cadence = block.get("cadence", 10)
        snap = block.get("snapshot_cadence")
        for name, v in (("cadence", cadence), ("snapshot_cadence", snap)):
            if v is not None and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"evolve.{name} must be a positive integer")
        return cls(ordering, method, dt, t_final, cadence, snap,
                   _num(block, "norm_tol", 1e-6, positive=True),
                   _num(block, "herm_tol", 1e-6, positive=True),
                   _num(block, "bound_tol", 1e-6, positive=True))


@dataclass
class RunConfig:
    grid: GridConfig
    state: list[StateSpec]
    hamiltonian: HamiltonianConfig
    evolve: EvolveBlock
    oracle: dict = field(default_factory=dict)
    hbar_scan: dict = field(default_factory=dict)
    compare: dict = field(default_factory=dict)
    convert: dict = field(default_factory=dict)
    output_dir: str = "charkin_out"
    formats: tuple[str, ...] = ("bin",)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        grid = GridConfig.parse(raw.get("grid", {}))
        state_block = raw.get("state", {"kind": "coherent", "alpha": [1.0, 0.0]})
        blocks = state_block if isinstance(state_block, list) else [state_block]
        try:
            states = [StateSpec.from_dict(b) for b in blocks]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid state: {exc}") from None
        if len(states) != grid.N:
            raise ConfigError(f"state needs one entry per mode ({grid.N}), got {len(states)}")
        ham = HamiltonianConfig.parse(raw.get("hamiltonian", {}))
        evolve = EvolveBlock.parse(raw.get("evolve", {}))
        output = raw.get("output", {})
        if not isinstance(output, dict):
            raise ConfigError("output block must be an object")
        formats = tuple(output.get("formats", ["bin"]))
        if not formats or any(f not in FORMATS for f in formats):
            raise ConfigError(f"output.formats must be a non-empty subset of {FORMATS}")
        cfg = cls(grid, states, ham, evolve, raw.get("oracle", {}), raw.get("hbar_scan", {}),
                  raw.get("compare", {}), raw.get("convert", {}),
                  str(output.get("dir", "charkin_out")), formats, raw)
        cfg._cross_validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    def _cross_validate(self) -> None:
        ev, ham = self.evolve, self.hamiltonian
        ordering = Ordering(ev.ordering)
        if ev.method == RhsMethod.DISTRIBUTIONAL and not ham.is_polynomial:
            raise ConfigError("the distributional method needs a polynomial Hamiltonian")
        if ev.method == RhsMethod.STAR_PRODUCT and ordering is not Ordering.NORMAL:
            raise ConfigError("the star_product method supports normal order only")
        if self.grid.N > 1 and (ham.is_polynomial or ev.method != RhsMethod.QUADRATURE):
            raise ConfigError("multi-mode runs need the gaussian preset with the quadrature method")
        if ordering is Ordering.CLASSICAL and ev.method == RhsMethod.STAR_PRODUCT:
            raise ConfigError("classical runs use the distributional or quadrature method")

    @property
    def ordering(self) -> Ordering:
        return Ordering(self.evolve.ordering)

    def echo(self) -> dict:
        """Normalised configuration for manifests."""
        return {
            "grid": asdict(self.grid),
            "state": [s.to_dict() for s in self.state],
            "hamiltonian": asdict(self.hamiltonian),
            "evolve": asdict(self.evolve),
            "oracle": self.oracle,
            "hbar_scan": self.hbar_scan,
            "output": {"dir": self.output_dir, "formats": list(self.formats)},
        }


def hamiltonian_rep(cfg: RunConfig, grid: PhaseGrid, ordering: Ordering, method: str):
    """Characteristic representation matching the chosen RHS method."""
    from .hamiltonian import distributional_from_symbol, gaussian_symbol_charfn, ham_charfn_grid, ham_distributional

    ham = cfg.hamiltonian
    if method == RhsMethod.DISTRIBUTIONAL:
        if ordering is Ordering.CLASSICAL or ham.classical is not None and ordering is Ordering.SYMMETRIC:
            return distributional_from_symbol(ham.symbol(grid.hbar, grid.omega), ordering)
        return ham_distributional(ham.operator(grid.hbar, grid.omega), ordering, grid.hbar, grid.omega)
    if not ham.is_polynomial:
        return gaussian_symbol_charfn(grid, ordering, ham.width, ham.amplitude)
    rep: GridSampled = ham_charfn_grid(ham.operator(grid.hbar, grid.omega), grid, ordering, ham.n_max)
    return rep


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)
