"""
config.py

Run configuration: a flat ``key = value`` file, one key per line, ``#``
comments. Every key is parsed and validated before anything is computed so a
bad file never leaves partial output behind.

Example:
    hamiltonian = fixtures/h2_minimal.fcidump
    method = msqite
    states = 0011; 1100
    dbeta = 0.1
    beta_max = 3.0
    output_dir = out/h2_ms

Relative ``hamiltonian`` paths are resolved against the directory of the
configuration file; ``output_dir`` is taken relative to the working directory.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

from errors import ConfigError
from fermion_map import POOL_KINDS
from msqite import MS_MODES
from qite import B_VARIANTS
from qlanczos import NORM_VARIANTS
from statevec import StateSpec, parse_state_spec

logger = logging.getLogger("config")

METHODS = ("qite", "fsqite", "msqite")
TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


def _bool(text: str) -> bool:
    word = text.lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"expected a boolean ({'/'.join(TRUE_WORDS + FALSE_WORDS)})")


def _choice(options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _states(text: str) -> List[StateSpec]:
    specs = [parse_state_spec(part) for part in text.split(";") if part.strip()]
    if not specs:
        raise ValueError("no state given")
    return specs


@dataclass
class RunConfig:
    hamiltonian: Path
    output_dir: Path
    n_qubits: Optional[int] = None
    method: str = "qite"
    mode: str = "state_specific"
    pool: str = "hamiltonian"
    epsilon: float = 0.0
    dbeta: float = 0.1
    dbeta2: float = 0.05
    beta_max: float = 5.0
    b_variant: str = "commutator"
    reg: float = 0.0
    grad_tol: float = 1e-8
    energy_shift: float = 0.0
    omega: Optional[float] = None
    # empty means the Hartree-Fock determinant (all zeros for Pauli input)
    states: List[StateSpec] = field(default_factory=list)
    spin_shift: float = 0.0
    spin_target: float = 0.0
    orthogonality_term: bool = True
    qlanczos: bool = False
    norm_estimator: str = "reference_shifted"
    track_fidelity: bool = False

    @property
    def is_fcidump(self) -> bool:
        return self.hamiltonian.suffix.lower() == ".fcidump"


PARSERS: Dict[str, Callable[[str], object]] = {
    "hamiltonian": Path,
    "output_dir": Path,
    "n_qubits": int,
    "method": _choice(METHODS),
    "mode": _choice(MS_MODES),
    "pool": _choice(POOL_KINDS),
    "epsilon": float,
    "dbeta": float,
    "dbeta2": float,
    "beta_max": float,
    "b_variant": _choice(B_VARIANTS),
    "reg": float,
    "grad_tol": float,
    "energy_shift": float,
    "omega": float,
    "states": _states,
    "spin_shift": float,
    "spin_target": float,
    "orthogonality_term": _bool,
    "qlanczos": _bool,
    "norm_estimator": _choice(NORM_VARIANTS),
    "track_fidelity": _bool,
}


def parse_config_text(text: str, base_dir: Union[str, Path] = ".") -> RunConfig:
    values: Dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        try:
            values[key] = PARSERS[key](value)
        except ValueError as e:
            raise ConfigError(f"line {line_no}: bad value {value!r} for {key}: {e}") from None

    for required in ("hamiltonian", "output_dir"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    ham = values["hamiltonian"]
    if not ham.is_absolute():
        values["hamiltonian"] = Path(base_dir) / ham
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    cfg = parse_config_text(text, path.parent)
    logger.info("Loaded %s: method=%s pool=%s dbeta=%g beta_max=%g", path, cfg.method, cfg.pool,
                cfg.dbeta2 if cfg.method == "fsqite" else cfg.dbeta, cfg.beta_max)
    return cfg


def validate(cfg: RunConfig) -> None:
    if not cfg.hamiltonian.is_file():
        raise ConfigError(f"hamiltonian file {cfg.hamiltonian} does not exist")
    if not cfg.is_fcidump:
        if cfg.n_qubits is None or cfg.n_qubits < 1:
            raise ConfigError("n_qubits (>= 1) is required for Pauli-text Hamiltonians")
        if cfg.pool != "complete":
            raise ConfigError(f"pool {cfg.pool!r} needs molecular integrals; use pool = complete")
    for name in ("dbeta", "dbeta2", "beta_max"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be > 0, got {getattr(cfg, name)}")
    for name in ("epsilon", "reg", "grad_tol", "spin_shift"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be >= 0, got {getattr(cfg, name)}")
    step = cfg.dbeta2 if cfg.method == "fsqite" else cfg.dbeta
    if step > cfg.beta_max:
        raise ConfigError(f"time step {step} exceeds beta_max={cfg.beta_max}")
    if cfg.spin_target < 0 or abs(2 * cfg.spin_target - round(2 * cfg.spin_target)) > 1e-12:
        raise ConfigError(f"spin_target must be a non-negative half-integer, got {cfg.spin_target}")
    if cfg.spin_shift > 0 and not cfg.is_fcidump:
        raise ConfigError("spin_shift needs an FCIDUMP Hamiltonian (S^2 is built from the orbitals)")

    if cfg.method == "fsqite" and cfg.omega is None:
        raise ConfigError("method fsqite needs omega (target energy in Hartree)")
    if cfg.method != "msqite" and len(cfg.states) > 1:
        raise ConfigError(f"method {cfg.method} takes one initial state, got {len(cfg.states)}")
    if cfg.method == "msqite" and cfg.b_variant != "commutator":
        raise ConfigError("msqite only supports b_variant = commutator")
    if cfg.track_fidelity and cfg.method != "qite":
        raise ConfigError("track_fidelity applies to method qite only")
    if cfg.spin_shift > 0 and cfg.method != "msqite":
        raise ConfigError("spin_shift applies to method msqite only")
