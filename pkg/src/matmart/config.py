"""Experiment config: a small line-oriented format and its validator.

Format (UTF-8 text):

* ``[section]`` headers; recognized sections are ``experiment``, ``params``
  and ``generator``.
* ``key = value`` assignments inside a section; ``#`` starts a comment.
* Lists are comma-separated (``x = 0.5, 1.0``).
* Base matrices are whitespace-separated row-major reals under the
  generator's ``dim``: ``matrix = 1 0 0 1`` is reused for every step, and
  ``matrix_3 = ...`` overrides step 3 (1-based).

Example::

    [experiment]
    command = tail
    trials = 100000
    seed = 42
    workers = 2
    output = results.csv

    [params]
    x = 0.5, 1.0
    y = 1.0
    c = 1.0
    n = 25
    d = 4

    [generator]
    kind = gaussian_series
    dim = 4
    horizon = 25
    matrix = 1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1

Validation is collecting: every syntax error (with line number) and every
semantic violation (with its ``section.key`` path) is reported in one
:class:`matmart.errors.ConfigError`, not just the first.  The seed is
mandatory; reproducibility must never depend on wall-clock defaults.
"""

from dataclasses import dataclass

import numpy as np

from .bounds import BernsteinParams
from .errors import ConfigError, ParameterError
from .simulate import KINDS, STATE_SCALED, GeneratorSpec
from .symmat import SymMat

COMMANDS = ("bound", "simulate", "tail", "union-tail", "lemmas",
            "check-condition", "key-step")

_SECTIONS = ("experiment", "params", "generator")

_GENERATOR_COMMANDS = ("simulate", "tail", "union-tail", "check-condition", "key-step")
_PARAMS_COMMANDS = ("bound", "tail", "union-tail")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run description; one grid point per (x, y) pair."""

    command: str
    seed: int
    trials: int = 1
    workers: int = 1
    output_path: str = None  # type: ignore[assignment]
    generator: GeneratorSpec = None  # type: ignore[assignment]
    xs: tuple = ()
    ys: tuple = ()
    c: float = None  # type: ignore[assignment]
    n: int = None  # type: ignore[assignment]
    d: int = None  # type: ignore[assignment]
    t: float = None  # type: ignore[assignment]
    p_max: int = 12
    tc_values: tuple = (0.1, 0.5, 0.9)

    def grid_points(self):
        """BernsteinParams for every (x, y) pair in the grid."""
        out = []
        for x in self.xs:
            for y in self.ys:
                out.append(BernsteinParams(x=x, y=y, c=self.c, n=self.n,
                                           d=self.d, t=self.t))
        return out


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, msg):
        self.errors.append(msg)

    def raise_if_any(self):
        if self.errors:
            raise ConfigError(self.errors)


def _scan(text, errs):
    """First pass: raw (section, key) -> (value, line) with syntax checks."""
    table = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                errs.add(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in line:
            errs.add(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        if section is None:
            errs.add(f"line {lineno}: assignment outside any [section]")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            errs.add(f"line {lineno}: empty key")
            continue
        if (section, key.lower()) in table:
            errs.add(f"line {lineno}: duplicate key {section}.{key}")
            continue
        table[(section, key.lower())] = (value, lineno)
    return table


class _Fields:
    """Typed accessors over the raw table, reporting by field path."""

    def __init__(self, table, errs):
        self.table = table
        self.errs = errs
        self.seen = set()

    def raw(self, section, key):
        self.seen.add((section, key))
        hit = self.table.get((section, key))
        return None if hit is None else hit[0]

    def _convert(self, section, key, conv, type_name):
        raw = self.raw(section, key)
        if raw is None:
            return None
        try:
            return conv(raw)
        except ValueError:
            self.errs.add(f"{section}.{key}: expected {type_name}, got {raw!r}")
            return None

    def get_int(self, section, key):
        return self._convert(section, key, lambda s: int(s, 0), "an integer")

    def get_float(self, section, key):
        return self._convert(section, key, float, "a real number")

    def get_str(self, section, key):
        return self.raw(section, key)

    def get_float_list(self, section, key):
        raw = self.raw(section, key)
        if raw is None:
            return None
        try:
            return tuple(float(part.strip()) for part in raw.split(",") if part.strip())
        except ValueError:
            self.errs.add(f"{section}.{key}: expected comma-separated reals, got {raw!r}")
            return None

    def unknown_keys(self):
        return [f"{s}.{k}" for (s, k) in self.table if (s, k) not in self.seen]


def _parse_generator(fields, errs):
    kind = fields.get_str("generator", "kind")
    dim = fields.get_int("generator", "dim")
    horizon = fields.get_int("generator", "horizon")
    s_lo = fields.get_float("generator", "s_lo")
    s_hi = fields.get_float("generator", "s_hi")

    if kind is None or dim is None or horizon is None:
        for name, val in (("kind", kind), ("dim", dim), ("horizon", horizon)):
            if val is None:
                errs.add(f"generator.{name}: required")
        return None
    if kind not in KINDS:
        errs.add(f"generator.kind: unknown kind {kind!r}; expected one of {KINDS}")
        return None
    if dim < 1:
        errs.add(f"generator.dim: must be >= 1, got {dim}")
        return None
    if horizon < 1:
        errs.add(f"generator.horizon: must be >= 1, got {horizon}")
        return None

    def read_matrix(key):
        raw = fields.raw("generator", key)
        if raw is None:
            return None
        try:
            vals = [float(tok) for tok in raw.split()]
        except ValueError:
            errs.add(f"generator.{key}: expected whitespace-separated reals")
            return None
        if len(vals) != dim * dim:
            errs.add(f"generator.{key}: expected {dim * dim} entries "
                     f"(row-major {dim}x{dim}), got {len(vals)}")
            return None
        return np.array(vals).reshape(dim, dim)

    shared = read_matrix("matrix")
    per_step = {}
    for k in range(1, horizon + 1):
        m = read_matrix(f"matrix_{k}")
        if m is not None:
            per_step[k] = m

    mats = []
    for k in range(1, horizon + 1):
        raw_mat = per_step.get(k, shared)
        if raw_mat is None:
            errs.add(f"generator.matrix: step {k} has no matrix "
                     f"(provide 'matrix' or 'matrix_{k}')")
            return None
        try:
            mats.append(SymMat(raw_mat))
        except ValueError as exc:
            errs.add(f"generator.matrix_{k}: base matrix {k} invalid: {exc}")
            return None

    try:
        return GeneratorSpec(kind=kind, base_matrices=tuple(mats), dim=dim,
                             horizon=horizon, s_lo=s_lo, s_hi=s_hi)
    except ParameterError as exc:
        errs.add(f"generator: {exc}")
        return None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; raises :class:`ConfigError` listing
    every syntax and semantic problem found."""
    errs = _Collector()
    table = _scan(text, errs)
    fields = _Fields(table, errs)

    command = fields.get_str("experiment", "command")
    if command is None:
        errs.add("experiment.command: required")
    elif command not in COMMANDS:
        errs.add(f"experiment.command: unknown command {command!r}; "
                 f"expected one of {COMMANDS}")

    seed = fields.get_int("experiment", "seed")
    if seed is None and ("experiment", "seed") not in table:
        errs.add("experiment.seed: required (reproducibility contract; "
                 "no wall-clock default)")

    trials = fields.get_int("experiment", "trials")
    workers = fields.get_int("experiment", "workers")
    output = fields.get_str("experiment", "output")
    if trials is not None and trials < 1:
        errs.add(f"experiment.trials: must be >= 1, got {trials}")
    if workers is not None and workers < 1:
        errs.add(f"experiment.workers: must be >= 1, got {workers}")

    xs = fields.get_float_list("params", "x")
    ys = fields.get_float_list("params", "y")
    c = fields.get_float("params", "c")
    n = fields.get_int("params", "n")
    d = fields.get_int("params", "d")
    t = fields.get_float("params", "t")
    p_max = fields.get_int("params", "p_max")
    tc_values = fields.get_float_list("params", "tc")

    generator = None
    if any(section == "generator" for section, _ in table):
        generator = _parse_generator(fields, errs)

    for path in fields.unknown_keys():
        errs.add(f"{path}: unknown key")

    if command in COMMANDS:
        if command in _GENERATOR_COMMANDS and generator is None:
            errs.add(f"generator: section required for command {command!r}")
        if command in _PARAMS_COMMANDS:
            for name, val in (("x", xs), ("y", ys), ("c", c), ("n", n), ("d", d)):
                if val is None:
                    errs.add(f"params.{name}: required for command {command!r}")
        if command in ("tail", "union-tail", "simulate") and trials is None:
            errs.add(f"experiment.trials: required for command {command!r}")
        if command == "lemmas" and d is None:
            errs.add("params.d: required for command 'lemmas'")
        if command in ("check-condition", "key-step") and c is None:
            errs.add("params.c: required for command %r" % command)

    # cross-field checks (only meaningful when the pieces parsed)
    if xs is not None:
        for x in xs:
            if x <= 0:
                errs.add(f"params.x: values must be positive, got {x}")
    if ys is not None:
        for y in ys:
            if y <= 0:
                errs.add(f"params.y: values must be positive, got {y}")
    if c is not None and c <= 0:
        errs.add(f"params.c: must be positive, got {c}")
    if n is not None and n < 1:
        errs.add(f"params.n: must be >= 1, got {n}")
    if d is not None and d < 1:
        errs.add(f"params.d: must be >= 1, got {d}")
    if p_max is not None and p_max < 2:
        errs.add(f"params.p_max: must be >= 2, got {p_max}")
    if t is not None and c is not None and not (0.0 < c * t < 1.0):
        errs.add(f"params.t: explicit tilt violates the constraint 0<ct<1 "
                 f"(t={t}, c={c}, ct={c * t})")
    if tc_values is not None:
        for tc in tc_values:
            if not (0.0 < tc < 1.0):
                errs.add(f"params.tc: values must lie in (0, 1), got {tc}")
    if generator is not None:
        if d is not None and d != generator.dim:
            errs.add(f"params.d: {d} does not match generator.dim {generator.dim}")
        if n is not None and n > generator.horizon:
            errs.add(f"params.n: {n} exceeds generator.horizon {generator.horizon}")

    errs.raise_if_any()

    return ExperimentConfig(
        command=command,
        seed=seed,
        trials=trials if trials is not None else 1,
        workers=workers if workers is not None else 1,
        output_path=output,
        generator=generator,
        xs=xs or (),
        ys=ys or (),
        c=c,
        n=n,
        d=d,
        t=t,
        p_max=p_max if p_max is not None else 12,
        tc_values=tc_values if tc_values is not None else (0.1, 0.5, 0.9),
    )


def format_generator(spec: GeneratorSpec) -> str:
    """Serialize a GeneratorSpec as a config ``[generator]`` section.

    Round-trips through :func:`parse_config`: per-step matrices are written
    with full precision via ``repr``.
    """
    lines = ["[generator]", f"kind = {spec.kind}", f"dim = {spec.dim}",
             f"horizon = {spec.horizon}"]
    if spec.kind == STATE_SCALED:
        lines.append(f"s_lo = {spec.s_lo!r}")
        lines.append(f"s_hi = {spec.s_hi!r}")
    for k, a in enumerate(spec.base_matrices, 1):
        flat = " ".join(repr(float(v)) for v in a.entries.ravel())
        lines.append(f"matrix_{k} = {flat}")
    return "\n".join(lines) + "\n"
