# isacgan/config.py

"""
ISACGAN - System, training and run configuration.

Defaults reproduce the reference scenario: K = 3 users, M = 4 BS antennas,
N = 30 RIS elements, -20 dBm transmit power, path-loss reference -30 dBm
at 1 m, exponents 3 / 2.3 / 2 over 140 m / 50 m / 2 m.
"""
import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

from isacgan.errors import ConfigError
from isacgan.utils import db_to_linear, short_hash

LINKS = ("sensing", "comm")

PROFILES = {
    "desk": {"Q": 200, "V": 5, "epochs": 50},
    "full": {"Q": 1000, "V": 10, "epochs": 100},
}


@dataclass(frozen=True)
class SystemConfig:
    """Physical and protocol constants. P = M and C = N always."""

    M: int = 4                          # BS transmit antennas
    N: int = 30                         # RIS elements
    K: int = 3                          # downlink users
    spacing_ratio: float = 0.5          # d / lambda
    k1_ris: float = 10.0                # Rician factor, BS-RIS
    k1_ue: float = 0.0                  # Rician factor, RIS-UE (Rayleigh)
    pl_ref_dbm: float = -30.0
    d_ref_m: float = 1.0
    d1_m: float = 140.0                 # BS-target-BS
    d2_m: float = 50.0                  # BS-RIS
    d3_m: float = 2.0                   # RIS-UE
    zeta1: float = 3.0
    zeta2: float = 2.3
    zeta3: float = 2.0
    tx_power_dbm: float = -20.0
    theta_target_rad: float = -2.0 * math.pi / 3.0
    theta_aod_rad: float = math.pi / 3.0
    theta_aoa_rad: float = math.pi / 3.0
    si_gain: float = 1.0
    rho: float = 1e4
    seed: int = 0

    def __post_init__(self):
        for key in ("M", "N", "K"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if self.spacing_ratio <= 0:
            raise ConfigError("spacing_ratio", "must be > 0")
        for key in ("k1_ris", "k1_ue", "si_gain"):
            if getattr(self, key) < 0:
                raise ConfigError(key, "must be >= 0")
        for key in ("d_ref_m", "d1_m", "d2_m", "d3_m"):
            if getattr(self, key) <= 0:
                raise ConfigError(key, "distances must be > 0")
        if self.rho <= 0:
            raise ConfigError("rho", "must be > 0")
        if self.seed < 0:
            raise ConfigError("seed", "must be >= 0")

    @property
    def P(self) -> int:
        return self.M

    @property
    def C(self) -> int:
        return self.N

    @property
    def tx_power_linear(self) -> float:
        """Transmit power in mW."""
        return db_to_linear(self.tx_power_dbm)


@dataclass(frozen=True)
class TrainConfig:
    """Adversarial training hyper-parameters."""

    batch_size: int = 16
    alpha: float = 100.0
    lr_generator: float = 2e-4
    lr_discriminator: float = 2e-5
    epochs: int = 50
    validation_fraction: float = 0.1    # held out to pick the best epoch; 0 keeps the last
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        if self.alpha < 0:
            raise ConfigError("alpha", "must be >= 0")
        if self.lr_generator <= 0:
            raise ConfigError("lr_generator", "must be > 0")
        if self.lr_discriminator <= 0:
            raise ConfigError("lr_discriminator", "must be > 0")
        if self.epochs < 0:
            raise ConfigError("epochs", "must be >= 0")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction", "must lie in [0, 1)")


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs."""

    system: SystemConfig = field(default_factory=SystemConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    Q: int = 200
    V: int = 5
    train_snr_db: tuple[float, ...] = (10.0, 15.0, 20.0)
    test_snr_db: tuple[float, ...] = tuple(np.arange(-10.0, 30.0 + 1e-9, 2.5).tolist())
    sweep_snr_db: tuple[float, ...] = (-5.0, 10.0)
    sweep_values: tuple[int, ...] = (4, 8, 16)
    sweep_variable: str = "M"
    complexity_m_values: tuple[int, ...] = (2, 4, 8, 16)
    complexity_n_values: tuple[int, ...] = (10, 20, 30, 40, 50)
    test_fraction: float = 0.1
    trials: int = 200
    link: str = "sensing"
    user: int = 0
    workers: int = 1
    profile: str = "desk"
    out_dir: str = "runs"
    experiment_id: str = "default"

    def __post_init__(self):
        if self.Q < 1:
            raise ConfigError("Q", "must be >= 1")
        if self.V < 1:
            raise ConfigError("V", "must be >= 1")
        if not self.train_snr_db:
            raise ConfigError("train_snr_db", "grid must not be empty")
        if not self.test_snr_db:
            raise ConfigError("test_snr_db", "grid must not be empty")
        if any(not -60.0 <= s <= 60.0 for s in self.train_snr_db):
            raise ConfigError("train_snr_db", "values must lie in [-60, 60] dB")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction", "must lie in (0, 1)")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.link not in LINKS:
            raise ConfigError("link", f"must be one of {', '.join(LINKS)}")
        if not 0 <= self.user < self.system.K:
            raise ConfigError("user", f"must lie in [0, {self.system.K - 1}]")
        if self.sweep_variable not in ("M", "N"):
            raise ConfigError("sweep_variable", "must be M or N")
        if any(v < 1 for v in self.sweep_values):
            raise ConfigError("sweep_values", "values must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.profile not in PROFILES:
            raise ConfigError("profile", f"must be one of {', '.join(PROFILES)}")

    @property
    def seed(self) -> int:
        return self.system.seed

    @property
    def link_tag(self) -> str:
        """File-name tag for the link (and user, for the communication link)."""
        return "sensing" if self.link == "sensing" else f"comm_k{self.user}"

    def model_fingerprint(self) -> dict:
        """Fields a trained model depends on; evaluation-only settings are excluded."""
        return {
            "system": dataclasses.asdict(self.system),
            "train": dataclasses.asdict(self.train),
            "Q": self.Q,
            "V": self.V,
            "train_snr_db": list(self.train_snr_db),
            "test_fraction": self.test_fraction,
            "link": self.link,
            "user": self.user,
        }

    def config_hash(self) -> str:
        return short_hash(self.model_fingerprint())

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)


# --- Key -> (section, field) table for the key=value format ---
_SYSTEM_KEYS = {f.name for f in dataclasses.fields(SystemConfig)}
_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"seed"}
_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"system", "train"}
_GRID_KEYS = {"train_snr_db", "test_snr_db", "sweep_snr_db"}
_INT_LIST_KEYS = {"sweep_values", "complexity_m_values", "complexity_n_values"}


def parse_grid(text: str) -> tuple[float, ...]:
    """Parses `start:step:stop` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        start, step, stop = (float(part) for part in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + i * step) for i in range(count))
    return tuple(float(part) for part in text.split(",") if part.strip())


def _coerce(key: str, raw: str, template):
    """Converts `raw` to the type of the field default `template`."""
    try:
        if key in _GRID_KEYS:
            return parse_grid(raw)
        if key in _INT_LIST_KEYS:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        if isinstance(template, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r} as {type(template).__name__}") from exc


def read_config_lines(lines) -> list[tuple[str, str]]:
    """Splits `key=value` lines, skipping blanks and `#` comments."""
    pairs = []
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}", f"expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def parse_config(path: str | None = None, overrides=(), *, seed: int | None = None,
                 profile: str | None = None, out_dir: str | None = None,
                 link: str | None = None) -> RunConfig:
    """
    Builds a validated RunConfig.

    Precedence, lowest first: built-in defaults, profile, config file,
    `--set` overrides, explicit flag arguments.
    """
    pairs = []
    if path is not None:
        with open(path, "r", encoding="utf-8") as handle:
            pairs.extend(read_config_lines(handle))
    pairs.extend(read_config_lines(overrides))

    values: dict[str, str] = {}
    for key, value in pairs:
        if key not in _SYSTEM_KEYS | _TRAIN_KEYS | _RUN_KEYS:
            raise ConfigError(key, "unknown configuration key")
        values[key] = value

    chosen_profile = profile or values.get("profile", "desk")
    if chosen_profile not in PROFILES:
        raise ConfigError("profile", f"must be one of {', '.join(PROFILES)}")

    system_defaults = SystemConfig.__dataclass_fields__
    train_defaults = TrainConfig.__dataclass_fields__
    run_defaults = RunConfig()

    system_kwargs, train_kwargs, run_kwargs = {}, {}, {"profile": chosen_profile}
    profile_values = PROFILES[chosen_profile]
    run_kwargs["Q"] = profile_values["Q"]
    run_kwargs["V"] = profile_values["V"]
    train_kwargs["epochs"] = profile_values["epochs"]

    for key, raw in values.items():
        if key in _SYSTEM_KEYS:
            system_kwargs[key] = _coerce(key, raw, system_defaults[key].default)
        elif key in _TRAIN_KEYS:
            train_kwargs[key] = _coerce(key, raw, train_defaults[key].default)
        elif key != "profile":
            run_kwargs[key] = _coerce(key, raw, getattr(run_defaults, key))

    if seed is not None:
        system_kwargs["seed"] = seed
    if out_dir is not None:
        run_kwargs["out_dir"] = out_dir
    if link is not None:
        run_kwargs["link"] = link

    system = SystemConfig(**system_kwargs)
    train = TrainConfig(seed=system.seed, **train_kwargs)
    return RunConfig(system=system, train=train, **run_kwargs)
