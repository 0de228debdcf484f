from pathlib import Path

import pytest

from config import RunConfig, load_config, parse_config_text
from errors import ConfigError
from statevec import OpenShellPair

FIXTURES = Path(__file__).parent / "fixtures"


def _parse(body: str) -> RunConfig:
    return parse_config_text("hamiltonian = h2_minimal.fcidump\noutput_dir = out/test\n" + body, FIXTURES)


def test_defaults():
    """Only the Hamiltonian and the output directory are required."""
    cfg = _parse("")
    assert cfg.hamiltonian == FIXTURES / "h2_minimal.fcidump"
    assert cfg.output_dir == Path("out/test")
    assert cfg.is_fcidump
    assert (cfg.method, cfg.pool, cfg.dbeta, cfg.beta_max) == ("qite", "hamiltonian", 0.1, 5.0)
    assert cfg.states == []
    assert cfg.orthogonality_term is True
    assert cfg.norm_estimator == "reference_shifted"


def test_values_and_comments():
    """Typed values, trailing comments and state lists."""
    cfg = _parse(
        "# model space\n"
        "method = msqite   # two states\n"
        "states = 0011; pair:1001,0110,1\n"
        "qlanczos = yes\n"
        "orthogonality_term = off\n"
        "spin_shift = 0.5\n"
        "reg = 1e-6\n"
    )
    assert cfg.method == "msqite"
    assert cfg.states == ["0011", OpenShellPair("1001", "0110", 1)]
    assert cfg.qlanczos is True
    assert cfg.orthogonality_term is False
    assert cfg.spin_shift == 0.5
    assert cfg.reg == 1e-6


@pytest.mark.parametrize("body, message", [
    ("colour = blue\n", "unknown key"),
    ("dbeta = 0.1\ndbeta = 0.2\n", "duplicate key"),
    ("dbeta\n", "expected 'key = value'"),
    ("dbeta = fast\n", "bad value"),
    ("qlanczos = maybe\n", "bad value"),
    ("method = vqe\n", "bad value"),
    ("states = ;\n", "bad value"),
    ("dbeta = 0\n", "dbeta must be > 0"),
    ("dbeta = 0.5\nbeta_max = 0.2\n", "exceeds beta_max"),
    ("epsilon = -1\n", "epsilon must be >= 0"),
    ("spin_target = 0.3\n", "half-integer"),
    ("method = fsqite\n", "needs omega"),
    ("states = 0011; 1100\n", "takes one initial state"),
    ("method = msqite\nb_variant = legacy\n", "only supports b_variant"),
    ("method = msqite\ntrack_fidelity = true\n", "track_fidelity"),
    ("spin_shift = 0.5\n", "msqite only"),
])
def test_rejected_configs(body, message):
    """Every problem is reported before any work starts."""
    with pytest.raises(ConfigError, match=message):
        _parse(body)


def test_missing_required_key():
    """output_dir has no default."""
    with pytest.raises(ConfigError, match="output_dir"):
        parse_config_text("hamiltonian = h2_minimal.fcidump\n", FIXTURES)


def test_missing_hamiltonian_file():
    """The Hamiltonian path must exist."""
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config_text("hamiltonian = nowhere.fcidump\noutput_dir = out\n", FIXTURES)


def test_pauli_input_rules():
    """Pauli text needs n_qubits and the complete pool, and has no S^2."""
    base = "hamiltonian = two_qubit.pauli\noutput_dir = out\n"
    with pytest.raises(ConfigError, match="n_qubits"):
        parse_config_text(base + "pool = complete\n", FIXTURES)
    with pytest.raises(ConfigError, match="needs molecular integrals"):
        parse_config_text(base + "n_qubits = 2\n", FIXTURES)
    with pytest.raises(ConfigError, match="FCIDUMP"):
        parse_config_text(base + "n_qubits = 2\npool = complete\nmethod = msqite\nspin_shift = 1\n", FIXTURES)
    cfg = parse_config_text(base + "n_qubits = 2\npool = complete\n", FIXTURES)
    assert not cfg.is_fcidump


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.conf")))
def test_bundled_configs_load(name):
    """Every example configuration in fixtures/ is valid."""
    cfg = load_config(FIXTURES / name)
    assert cfg.hamiltonian.is_file()


def test_unreadable_config(tmp_path):
    """A missing file is a configuration error."""
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.conf")
