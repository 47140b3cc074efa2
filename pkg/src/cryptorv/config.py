"""Timing and power configuration.

Text files use one ``key = value`` per line with ``#`` comments. Keys::

    fill.md / fill.aes_haraka / fill.keccak        pipeline fill cycles
    dispatch.md / dispatch.aes_haraka / dispatch.keccak
                                                   cycles added to every dispatch
    setup.<algorithm>                              cycles added when an engine switches
                                                   into that mode (first dispatch included)
    rc_precompute_cycles                           Haraka constant derivation (default:
                                                   the SHAKE-256 squeeze on this model)
    dma.setup / dma.words_per_cycle
    buf.setup / buf.words_per_cycle
    hazard.load_use / hazard.branch_flush
    frequency_mhz
    power.basis_w                                  power used for Mbps/W
    power.md / power.keccak / power.aes_haraka / power.core_dynamic / power.soc_dynamic
    im_size                                        instruction memory capacity
    cycle_limit                                    default runaway cap
"""

import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from cryptorv.errors import ConfigError
from cryptorv.modes import Algorithm, Engine

_ENGINE_KEYS = {"md": Engine.MD, "aes_haraka": Engine.AES_HARAKA, "aes": Engine.AES_HARAKA,
                "haraka": Engine.AES_HARAKA, "keccak": Engine.KECCAK}


@dataclass(frozen=True)
class TimingConfig:
    fill: dict = field(default_factory=lambda: {Engine.MD: 4, Engine.AES_HARAKA: 4, Engine.KECCAK: 2})
    dispatch: dict = field(default_factory=lambda: {e: 0 for e in Engine})
    mode_setup: dict = field(default_factory=lambda: {a: 0 for a in Algorithm})
    rc_precompute: int | None = None
    dma_setup: int = 4
    dma_words_per_cycle: int = 1
    buf_setup: int = 1
    buf_words_per_cycle: int = 1
    load_use_stall: int = 1
    branch_flush: int = 2
    frequency_mhz: float = 160.0
    im_size: int = 4096
    cycle_limit: int = 50_000_000

    def __post_init__(self):
        for name, table in (("fill", self.fill), ("dispatch", self.dispatch),
                            ("setup", self.mode_setup)):
            if any(v < 0 for v in table.values()):
                raise ConfigError(f"{name} cycles must be non-negative")
        if self.dma_setup < 0 or self.buf_setup < 0:
            raise ConfigError("setup latencies must be non-negative")
        if self.dma_words_per_cycle < 1 or self.buf_words_per_cycle < 1:
            raise ConfigError("transfer rates must be at least 1 word per cycle")
        if self.load_use_stall < 0:
            raise ConfigError("hazard.load_use must be non-negative")
        if self.branch_flush < 2:
            raise ConfigError("hazard.branch_flush must be at least 2 (branches resolve in EXE)")
        if self.frequency_mhz <= 0:
            raise ConfigError("frequency_mhz must be positive")
        if self.rc_precompute is not None and self.rc_precompute < 1:
            raise ConfigError("rc_precompute_cycles must be positive")

    @property
    def rc_precompute_cycles(self):
        """Explicit value, or the permutations needed to squeeze 640 bytes of SHAKE-256."""
        if self.rc_precompute is not None:
            return self.rc_precompute
        perms = math.ceil(640 / 136)
        return perms * (self.fill[Engine.KECCAK] + Algorithm.SHA3_256.rounds)

    def engine_cycles(self, mode, switching=False):
        """Busy time of one dispatch of ``mode`` (``switching``: mode differs from last)."""
        mode = Algorithm(mode)
        eng = mode.engine
        extra = self.mode_setup.get(mode, 0) if switching else 0
        return self.dispatch[eng] + extra + self.fill[eng] + mode.rounds


@dataclass(frozen=True)
class PowerConfig:
    md: float = 0.127
    keccak: float = 0.200
    aes_haraka: float = 0.491
    core_dynamic: float = 0.851
    soc_dynamic: float = 3.33
    soc_total: float = 4.03
    basis: float = 3.33

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"power.{f.name} must be positive, got {getattr(self, f.name)}")

    def unit(self, engine):
        return {Engine.MD: self.md, Engine.KECCAK: self.keccak,
                Engine.AES_HARAKA: self.aes_haraka}[Engine(engine)]


@dataclass(frozen=True)
class Config:
    timing: TimingConfig = field(default_factory=TimingConfig)
    power: PowerConfig = field(default_factory=PowerConfig)


def _number(key, text, kind=int):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    return value


def parse_config_text(text, base=None, source="<config>"):
    """Apply ``key = value`` lines on top of ``base`` (default: uncalibrated defaults)."""
    base = base or Config()
    t, p = base.timing, base.power
    fill, dispatch, setup = dict(t.fill), dict(t.dispatch), dict(t.mode_setup)
    tkw, pkw = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        where = f"{source}:{lineno}"
        if not sep or not value:
            raise ConfigError(f"{where}: expected key = value")
        group, _, name = key.partition(".")
        if group in ("fill", "dispatch") and name in _ENGINE_KEYS:
            (fill if group == "fill" else dispatch)[_ENGINE_KEYS[name]] = _number(where, value)
        elif group == "setup":
            try:
                setup[Algorithm.parse(name)] = _number(where, value)
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        elif key == "rc_precompute_cycles":
            tkw["rc_precompute"] = _number(where, value)
        elif key in ("dma.setup", "dma.words_per_cycle", "buf.setup", "buf.words_per_cycle"):
            tkw[key.replace(".", "_")] = _number(where, value)
        elif key == "hazard.load_use":
            tkw["load_use_stall"] = _number(where, value)
        elif key == "hazard.branch_flush":
            tkw["branch_flush"] = _number(where, value)
        elif key in ("frequency_mhz",):
            tkw[key] = _number(where, value, float)
        elif key in ("im_size", "cycle_limit"):
            tkw[key] = _number(where, value)
        elif group == "power" and name in ("md", "keccak", "aes_haraka", "core_dynamic",
                                           "soc_dynamic", "soc_total", "basis_w"):
            pkw["basis" if name == "basis_w" else name] = _number(where, value, float)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
    timing = replace(t, fill=fill, dispatch=dispatch, mode_setup=setup, **tkw)
    power = replace(p, **pkw)
    return Config(timing, power)


def calibration_text():
    return (resources.files("cryptorv") / "data" / "calibration.cfg").read_text()


def default_config(calibrated=True):
    """Model defaults, optionally with the packaged calibration applied."""
    if not calibrated:
        return Config()
    return parse_config_text(calibration_text(), source="calibration.cfg")


def load_config(path=None, calibrated=True):
    base = default_config(calibrated)
    if path is None:
        return base
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, base, source=str(path))
