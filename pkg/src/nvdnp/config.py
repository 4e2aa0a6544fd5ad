"""Run configuration: defaults, the flat ``key = value`` file format, validation."""

from dataclasses import dataclass, field, fields, asdict
import math

from . import constants as C


class ConfigError(ValueError):
    pass


def _opt(default, unit, help):
    return field(default=default, metadata={"unit": unit, "help": help})


@dataclass
class RunConfig:
    protocol: str = _opt("ise", "", "transfer protocol: ise or novel")
    zfs_mhz: float = _opt(C.ZFS_D, "MHz", "NV zero-field splitting D")
    larmor_mhz: float = _opt(C.LARMOR_C13, "MHz", "13C Larmor frequency; sets the static field")
    theta_deg: float = _opt(0.0, "deg", "NV axis to field misalignment (simulate)")
    beff_shift_fraction: float = _opt(0.5, "", "secular shift A = fraction * a_z in B_eff")
    rabi_mhz: float = _opt(1.0, "MHz", "ISE drive amplitude Omega")
    sweep_rate_mhz_per_us: float = _opt(0.3, "MHz/us", "ISE frequency sweep rate")
    sweep_range_mhz: float = _opt(100.0, "MHz", "ISE frequency sweep range")
    sweep_lead_mhz: float = _opt(10.0, "MHz", "sweep start below the theta = 0 transition")
    lock_rabi_mhz: float = _opt(C.LARMOR_C13, "MHz", "NOVEL spin-lock Rabi frequency")
    lock_duration_ms: float = _opt(0.2, "ms", "NOVEL spin-lock length")
    t1rho_ms: float = _opt(0.465, "ms", "NV rotating-frame relaxation time")
    diffusion_window_ms: float = _opt(10.0, "ms", "diffusion window per cycle, NV in m_s = 0")
    bath_spins: int = _opt(500, "", "mean number of 13C spins per bath sample")
    abundance: float = _opt(C.C13_ABUNDANCE, "", "13C natural abundance")
    frozen_core_khz: float = _opt(10.0, "kHz", "frozen-core hyperfine threshold")
    diffusion_linewidth_khz: float = _opt(2.0, "kHz", "flip-flop linewidth")
    resonator_hwhm_mhz: float = _opt(100.0, "MHz", "resonator half width; inf disables")
    resonator_offset_mhz: float = _opt(0.0, "MHz", "resonator centre minus theta = 0 transition")
    resonator_power_lorentzian: bool = _opt(False, "", "filter power instead of amplitude")
    reset_fidelity: float = _opt(0.96, "", "NV m_s = 0 population after optical reset")
    pump_rate_khz: float = _opt(1.0, "kHz", "optical pumping rate")
    t1n_s: float = _opt(600.0, "s", "13C relaxation time in the polarizing field")
    n_cycles: int = _opt(29000, "", "polarization cycles (about 5 min)")
    record_every: int = _opt(100, "", "trace stride in cycles")
    n_seeds: int = _opt(20, "", "bath samples per run")
    master_seed: int = _opt(0, "", "master seed; bath k uses stream (master_seed, k)")
    stochastic: bool = _opt(False, "", "sample flips instead of expected-value updates")
    angles_deg: str = _opt("0,2,4,6,8,10", "deg", "angle-sweep grid")

    def validate(self, lines=None):
        """Raise ``ConfigError`` naming the offending key (and line, if known)."""
        lines = lines or {}

        def bad(key, msg):
            where = f"line {lines[key]}: " if key in lines else ""
            raise ConfigError(f"{where}{key}: {msg}")

        if self.protocol not in ("ise", "novel"):
            bad("protocol", f"expected 'ise' or 'novel', got {self.protocol!r}")
        positive = ["zfs_mhz", "larmor_mhz", "sweep_rate_mhz_per_us", "sweep_range_mhz",
                    "lock_rabi_mhz", "t1rho_ms", "frozen_core_khz", "diffusion_linewidth_khz",
                    "resonator_hwhm_mhz", "t1n_s", "n_cycles", "record_every", "n_seeds",
                    "bath_spins"]
        for key in positive:
            if not getattr(self, key) > 0:
                bad(key, "must be positive")
        for key in ("lock_duration_ms", "diffusion_window_ms", "rabi_mhz"):
            if getattr(self, key) < 0:
                bad(key, "must be non-negative")
        if not 0 < self.abundance <= 1:
            bad("abundance", "must lie in (0, 1]")
        if not 0 <= self.reset_fidelity <= 1:
            bad("reset_fidelity", "must lie in [0, 1]")
        if not 0 <= self.theta_deg <= 90:
            bad("theta_deg", "must lie in [0, 90]")
        if self.protocol == "ise" and not self.rabi_mhz < self.larmor_mhz:
            bad("rabi_mhz", "must be below larmor_mhz for the ISE resonances to exist")
        try:
            self.angles()
        except ValueError as exc:
            bad("angles_deg", str(exc))
        return self

    def angles(self):
        out = [float(x) for x in self.angles_deg.split(",") if x.strip()]
        if any(not 0 <= a <= 90 for a in out):
            raise ValueError("angles must lie in [0, 90] degrees")
        return out

    def to_dict(self):
        return asdict(self)


FIELDS = {f.name: f for f in fields(RunConfig)}


def _parse_value(raw, kind):
    raw = raw.strip()
    if kind is bool or kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int or kind == "int":
        return int(raw)
    if kind is float or kind == "float":
        return float(raw)  # accepts inf
    return raw


def parse_config(text, base=None):
    """Parse ``key = value`` lines (``#`` starts a comment).

    Returns ``(config, line_numbers)``; unknown keys and duplicates are errors.
    """
    values = {} if base is None else base.to_dict()
    lines = {}
    for no, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {no}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"line {no}: unknown key {key!r}")
        if key in lines:
            raise ConfigError(f"line {no}: {key} already set on line {lines[key]}")
        try:
            values[key] = _parse_value(raw, FIELDS[key].type)
        except ValueError as exc:
            raise ConfigError(f"line {no}: {key}: {exc}") from None
        lines[key] = no
    cfg = RunConfig(**values)
    cfg.validate(lines)
    return cfg, lines


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def render_config(cfg=None):
    """Config file text for ``cfg`` (defaults if omitted), one commented line per key."""
    cfg = cfg or RunConfig()
    out = []
    for name, f in FIELDS.items():
        unit = f.metadata["unit"]
        note = f"{f.metadata['help']}" + (f" [{unit}]" if unit else "")
        out.append(f"{name} = {_render(getattr(cfg, name))}  # {note}")
    return "\n".join(out) + "\n"
