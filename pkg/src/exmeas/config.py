"""Model configuration files.

A config is an INI file with ``[model]``, ``[truncation]`` and
``[tolerances]`` sections, for example::

    [model]
    mode = multigraphex
    W = poisson_pmf(mean="exp(-x-y)")
    I = 0, 0.5

    [truncation]
    mark_cap = 20

Kallenberg slots are ``f`` (x, y, z), ``g``/``gp`` (x, y), ``h``/``hp``
and ``l``/``lp`` (x), plus scalars ``beta`` and ``gamma``; ``f_symmetric``
tells the certifier it may use the symmetric form.  Multigraphex slots are
``W`` (a family descriptor), ``S`` (an expression in v, k, or
``level_sets(g="...")``) with ``S_kmax`` and ``S_tail``, and ``I`` (a
comma-separated list starting at ``I(0)``) with ``I_tail``.  ``skew = a``
wraps the sampler so the intensity on ``[0, a)^2`` is doubled; it exists
only to exercise the exchangeability suite.
"""

from __future__ import annotations

import ast
import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .dsl import ParseError
from .finiteness import CUTOFFS, CertifyConfig
from .models import (F_VARS, G_VARS, H_VARS, S_VARS, DustSequence, KallenbergRep, LevelSetKernel, LevelSetStar,
                     Multigraphex, PmfKernel, PoissonKernel, StarIntensity, as_function, bernoulli_kernel)
from .quadrature import TOL_1D, TOL_2D
from .sampler import TruncationConfig


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


KALLENBERG_SLOTS = {"f": F_VARS, "g": G_VARS, "gp": G_VARS, "h": H_VARS, "hp": H_VARS, "l": H_VARS, "lp": H_VARS}
_ALIASES = {"g'": "gp", "h'": "hp", "l'": "lp"}
_KALLENBERG_KEYS = set(KALLENBERG_SLOTS) | {"beta", "gamma", "f_symmetric"}
_MULTIGRAPHEX_KEYS = {"w", "s", "s_kmax", "s_tail", "i", "i_tail"}
_COMMON_KEYS = {"mode", "skew"}


@dataclass(frozen=True)
class ModelConfig:
    model: Union[KallenbergRep, Multigraphex]
    truncation: TruncationConfig
    certify: CertifyConfig = field(default_factory=CertifyConfig)
    skew: Optional[float] = None
    source: str = ""

    @property
    def mode(self) -> str:
        return "kallenberg" if isinstance(self.model, KallenbergRep) else "multigraphex"

    def sampler(self, mark_cap: Optional[float] = None):
        from .harness import ModelSampler, SkewedSampler

        tc = self.truncation
        if mark_cap is not None:
            tc = TruncationConfig(mark_cap, tc.max_points, tc.max_atoms)
        s = ModelSampler(self.model, tc)
        return SkewedSampler(s, self.skew) if self.skew else s


def _unquote(v: str) -> str:
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def _number(section: str, key: str, raw: str) -> float:
    try:
        v = float(_unquote(raw))
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"[{section}] {key}: must be finite")
    return v


def _function(key: str, raw: str, variables):
    try:
        return as_function(_unquote(raw), variables)
    except ParseError as e:
        raise ConfigError(f"[model] {key}: {e}") from None
    except ValueError as e:
        raise ConfigError(f"[model] {key}: {e} (slot {key} takes {', '.join(variables)})") from None


def parse_descriptor(raw: str) -> tuple[str, dict]:
    """``name(key="value", n=3)`` -> ``("name", {"key": "value", "n": 3})``."""
    try:
        node = ast.parse(raw.strip(), mode="eval").body
    except SyntaxError:
        raise ConfigError(f"cannot parse family descriptor {raw!r}") from None
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.args):
        raise ConfigError(f"expected name(key=value, ...), got {raw!r}")
    kwargs = {}
    for kw in node.keywords:
        if kw.arg is None or not isinstance(kw.value, ast.Constant):
            raise ConfigError(f"descriptor arguments must be literals: {raw!r}")
        kwargs[kw.arg] = kw.value.value
    return node.func.id, kwargs


def _kernel(raw: str):
    name, kw = parse_descriptor(raw)
    try:
        if name == "poisson_pmf" and set(kw) == {"mean"}:
            return PoissonKernel(as_function(str(kw["mean"]), G_VARS))
        if name == "bernoulli" and set(kw) == {"p"}:
            return bernoulli_kernel(as_function(str(kw["p"]), G_VARS))
        if name == "pmf" and set(kw) == {"masses", "kmax"}:
            return PmfKernel(str(kw["masses"]), int(kw["kmax"]))
        if name == "level_sets" and set(kw) == {"f"}:
            return LevelSetKernel(str(kw["f"]))
    except (ParseError, ValueError) as e:
        raise ConfigError(f"[model] W: {e}") from None
    raise ConfigError(f"[model] W: unknown family {raw!r}; use poisson_pmf(mean=...), bernoulli(p=...), "
                      "pmf(masses=..., kmax=...) or level_sets(f=...)")


def _model_section(sec) -> tuple[Union[KallenbergRep, Multigraphex], Optional[float]]:
    mode = _unquote(sec.get("mode", "")).lower()
    keys = {_ALIASES.get(k, k) for k in sec.keys()}
    skew = _number("model", "skew", sec["skew"]) if "skew" in sec else None
    if skew is not None and skew <= 0:
        raise ConfigError("[model] skew: must be positive")
    if mode == "kallenberg":
        unknown = keys - {k.lower() for k in _KALLENBERG_KEYS} - _COMMON_KEYS
        if unknown:
            raise ConfigError(f"[model] unknown keys for kallenberg mode: {', '.join(sorted(unknown))}")
        slots = {}
        for key, raw in sec.items():
            name = _ALIASES.get(key, key)
            if name in KALLENBERG_SLOTS:
                slots[name] = _function(name, raw, KALLENBERG_SLOTS[name])
        beta = _number("model", "beta", sec.get("beta", "0"))
        gamma = _number("model", "gamma", sec.get("gamma", "0"))
        if beta < 0 or gamma < 0:
            raise ConfigError("[model] beta and gamma must be nonnegative")
        sym = _unquote(sec.get("f_symmetric", "false")).lower() in ("1", "true", "yes")
        return KallenbergRep(**slots, beta=beta, gamma=gamma, f_symmetric=sym), skew
    if mode == "multigraphex":
        unknown = keys - _MULTIGRAPHEX_KEYS - _COMMON_KEYS
        if unknown:
            raise ConfigError(f"[model] unknown keys for multigraphex mode: {', '.join(sorted(unknown))}")
        W = _kernel(sec["w"]) if "w" in sec else None
        S = None
        if "s" in sec:
            raw = sec["s"].strip()
            if raw.startswith("level_sets"):
                name, kw = parse_descriptor(raw)
                if set(kw) != {"g"}:
                    raise ConfigError("[model] S: use level_sets(g=\"...\")")
                S = LevelSetStar(_function("S", str(kw["g"]), G_VARS))
            else:
                S = StarIntensity(_function("S", raw, S_VARS), int(_number("model", "S_kmax", sec.get("s_kmax", "16"))),
                                  _number("model", "S_tail", sec.get("s_tail", "0")))
        I = None
        if "i" in sec:
            raw = _unquote(sec["i"])
            vals = [_number("model", "I", v) for v in raw.replace(";", ",").split(",") if v.strip()]
            I = DustSequence(tuple(vals), _number("model", "I_tail", sec.get("i_tail", "0")))
        try:
            return Multigraphex(W, S, I), skew
        except ValueError as e:
            raise ConfigError(f"[model] {e}") from None
    raise ConfigError("[model] mode must be kallenberg or multigraphex")


def loads(text: str, source: str = "<string>") -> ModelConfig:
    """Parse config text."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    unknown = set(cp.sections()) - {"model", "truncation", "tolerances"}
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    if not cp.has_section("model"):
        raise ConfigError("missing [model] section")
    try:
        model, skew = _model_section(cp["model"])
    except ValueError as e:
        raise ConfigError(str(e) if isinstance(e, ConfigError) else f"[model] {e}") from None
    tr = cp["truncation"] if cp.has_section("truncation") else {}
    try:
        tc = TruncationConfig(_number("truncation", "mark_cap", tr.get("mark_cap", "20")),
                              int(_number("truncation", "max_points", tr.get("max_points", "5e6"))),
                              int(_number("truncation", "max_atoms", tr.get("max_atoms", "5e6"))))
    except ValueError as e:
        raise ConfigError(f"[truncation] {e}") from None
    to = cp["tolerances"] if cp.has_section("tolerances") else {}
    cutoffs = CUTOFFS
    if "cutoffs" in to:
        cutoffs = tuple(_number("tolerances", "cutoffs", v) for v in _unquote(to["cutoffs"]).split(","))
    try:
        cc = CertifyConfig(_number("tolerances", "tol", to.get("tol", str(TOL_1D))),
                           _number("tolerances", "tol2", to.get("tol2", str(TOL_2D))), cutoffs)
    except ValueError as e:
        raise ConfigError(f"[tolerances] {e}") from None
    return ModelConfig(model, tc, cc, skew, source)


def load(path: Union[str, Path]) -> ModelConfig:
    """Read and parse a config file."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return loads(text, str(path))
