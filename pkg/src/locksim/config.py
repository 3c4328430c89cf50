"""Line-oriented run configuration.

Files carry one assignment per line, `section.key = value`, with `#`
comments and blank lines ignored.  Every key is declared in the schema
below with a type and default; anything else is a hard error (silently
ignored knobs in a fault-injection tool are how wrong campaigns get
published).

Integer lists accept comma-separated atoms where an atom is either a
number or an inclusive range `lo..hi`, so `0..3,8,30..31` reads as
0 1 2 3 8 30 31.
"""

from .core_isa import ConfigError

_INT = "int"
_BOOL = "bool"
_STR = "str"
_INTS = "ints"
_STRS = "strs"

# (section, key) -> (type, default)
SCHEMA = {
    ("core", "reset_pc"): (_INT, 0),
    ("run", "program"): (_STR, "checksum"),
    ("run", "stagger"): (_INT, 2),
    ("run", "sphere"): (_STR, "bare"),
    ("fault", "kind"): (_STR, ""),          # empty: no injection
    ("fault", "target"): (_STR, "reg"),
    ("fault", "cycle"): (_INT, 0),
    ("fault", "bit"): (_INT, 0),
    ("fault", "index"): (_INT, 0),
    ("fault", "copy"): (_STR, ""),    # empty = per-kind default
    ("fault", "width"): (_INT, 1),
    ("campaign", "kind"): (_STR, "ccf"),
    ("campaign", "targets"): (_STRS, ["reg", "pc"]),
    ("campaign", "regs"): (_INTS, list(range(32))),
    ("campaign", "bits"): (_INTS, list(range(32))),
    ("campaign", "cycles"): (_INTS, []),     # empty: full golden window
    ("campaign", "copies"): (_STRS, []),     # empty: kind's natural copies
    ("campaign", "width"): (_INT, 1),
    ("campaign", "count"): (_INT, 1000),
    ("campaign", "seed"): (_INT, 0),
    ("timing", "exec_cycles"): (_INT, 50),
    ("timing", "deadline_cycles"): (_INT, 200),
    ("timing", "max_retries"): (_INT, 1),
    ("timing", "detection_latency"): (_INT, 0),
    ("report", "plots"): (_BOOL, True),
}


def default_config():
    cfg = {}
    for (section, key), (_, default) in SCHEMA.items():
        cfg.setdefault(section, {})[key] = (list(default)
                                            if isinstance(default, list)
                                            else default)
    return cfg


def _parse_int(text, where):
    try:
        return int(text, 0)
    except ValueError:
        raise ConfigError(f"{where}: not an integer: {text!r}") from None


def _parse_int_list(text, where):
    out = []
    for atom in filter(None, (a.strip() for a in text.split(","))):
        if ".." in atom:
            lo_s, _, hi_s = atom.partition("..")
            lo = _parse_int(lo_s, where)
            hi = _parse_int(hi_s, where)
            if hi < lo:
                raise ConfigError(f"{where}: empty range {atom!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_parse_int(atom, where))
    return out


def _coerce(kind, text, where):
    if kind == _INT:
        return _parse_int(text, where)
    if kind == _BOOL:
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{where}: not a boolean: {text!r}")
    if kind == _INTS:
        return _parse_int_list(text, where)
    if kind == _STRS:
        return [a.strip() for a in text.split(",") if a.strip()]
    return text


def parse_config(text: str) -> dict:
    """Parse config text into {section: {key: value}} over the defaults."""
    cfg = default_config()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'section.key = value', "
                              f"got {raw.strip()!r}")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        if "." not in lhs:
            raise ConfigError(f"{where}: key must be section.key, "
                              f"got {lhs!r}")
        section, key = (s.strip() for s in lhs.split(".", 1))
        if (section, key) not in SCHEMA:
            raise ConfigError(f"{where}: unknown key {section}.{key}")
        kind, _ = SCHEMA[(section, key)]
        cfg[section][key] = _coerce(kind, rhs, f"{where} ({section}.{key})")
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
