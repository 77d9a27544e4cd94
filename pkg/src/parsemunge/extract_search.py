"""Transforms for unbounded categoric sets: numeric substring extraction and
user-specified substring search.

Extraction picks the longest format-valid numeric partition of an entry
(earliest occurrence on ties), matching a brute-force enumerate-all-substrings
rule exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

from .encoders import (
    CLASS_BOOLEAN,
    CLASS_NUMERIC,
    Behavior,
    sanitize_token,
    text_counts,
)
from .errors import ConfigError
from .tidytable import Cell, canon_text, distinct_counts


@lru_cache(maxsize=None)
def _pattern(allow_commas: bool, allow_decimal: bool, allow_negative: bool):
    core = r"\d+(?:,\d+)*" if allow_commas else r"\d+"
    if allow_decimal:
        core += r"(?:\.\d+)?"
    if allow_negative:
        core = "-?" + core
    return re.compile(core, re.ASCII)


def nmcm_extract(entry: str, allow_commas: bool = True, allow_decimal: bool = True,
                 allow_negative: bool = False) -> float | None:
    """Longest numeric partition of entry as a float, or None when absent.

    Every start position is tried so that partitions overlapping a shorter
    leading match are still found; ties go to the earliest occurrence.
    """
    pat = _pattern(allow_commas, allow_decimal, allow_negative)
    best_len, best_text = 0, None
    for i in range(len(entry)):
        m = pat.match(entry, i)
        if m is not None and m.end() - i > best_len:
            best_len, best_text = m.end() - i, m.group()
    if best_text is None:
        return None
    return float(best_text.replace(",", ""))


class NmcmBehavior(Behavior):
    """Numeric extraction fit on every train unique (scan-at-apply variant)."""

    name = "nmcm"
    coltype_class = CLASS_NUMERIC
    target_rule = "numeric_extract"

    def fit(self, counts, params, root_rule):
        flags = {
            "allow_commas": bool(params.get("allow_commas", True)),
            "allow_decimal": bool(params.get("allow_decimal", True)),
            "allow_negative": bool(params.get("allow_negative", False)),
        }
        lookup = {
            entry: nmcm_extract(entry, **flags)
            for entry in sorted(text_counts(counts))
        }
        return {"lookup": lookup, "flags": flags}

    def apply_cell(self, state, cell):
        text = canon_text(cell)
        if text is None:
            return (None,)
        return (nmcm_extract(text, **state["flags"]),)


class Nmc7Behavior(NmcmBehavior):
    """As nmcm, but only entries unseen in train are string-parsed at apply."""

    name = "nmc7"

    def apply_cell(self, state, cell):
        text = canon_text(cell)
        if text is None:
            return (None,)
        lookup = state["lookup"]
        if text in lookup:
            return (lookup[text],)
        return (nmcm_extract(text, **state["flags"]),)


@dataclass
class NumericExtractFit:
    lookup: dict[str, float | None]
    flags: dict = field(default_factory=dict)


@dataclass
class SearchSpec:
    """Ordered term groups; substrings within a group share one activation."""

    groups: list[list[str]]
    labels: list[str] = field(default_factory=list)
    ordinal: bool = False
    case_sensitive: bool = False

    def __post_init__(self):
        if not self.groups:
            raise ConfigError("srch requires at least one search term")
        for group in self.groups:
            for term in group:
                if not term:
                    raise ConfigError("srch terms must be nonempty strings")
        if not self.labels:
            self.labels = [sanitize_token(g[0]) for g in self.groups]
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("srch group labels must be unique")

    @classmethod
    def from_params(cls, params: dict) -> "SearchSpec":
        aggregate = params.get("aggregate")
        if aggregate:
            groups = [list(g) for g in aggregate]
        else:
            groups = [[t] for t in params.get("search", [])]
        return cls(
            groups=groups,
            ordinal=bool(params.get("ordinal", False)),
            case_sensitive=bool(params.get("case_sensitive", False)),
        )


class SrchBehavior(Behavior):
    """Boolean column per term group, or a single ordinal column."""

    name = "srch"
    coltype_class = CLASS_BOOLEAN

    def fit(self, counts, params, root_rule):
        spec = SearchSpec.from_params(params)
        groups = spec.groups
        if not spec.case_sensitive:
            groups = [[t.upper() for t in g] for g in groups]
        return {
            "groups": groups,
            "labels": spec.labels,
            "ordinal": spec.ordinal,
            "case_sensitive": spec.case_sensitive,
        }

    def output_tokens(self, state):
        if state["ordinal"]:
            return [""]
        return list(state["labels"])

    def apply_cell(self, state, cell):
        text = canon_text(cell)
        if text is None:
            hits = [False] * len(state["groups"])
        else:
            probe = text if state["case_sensitive"] else text.upper()
            hits = [any(t in probe for t in g) for g in state["groups"]]
        if state["ordinal"]:
            for i, hit in enumerate(hits):
                if hit:
                    return (float(i + 1),)
            return (0.0,)
        return tuple(1.0 if h else 0.0 for h in hits)


_NMCM = NmcmBehavior()
_NMC7 = Nmc7Behavior()
_SRCH = SrchBehavior()


def nmcm(col: list[Cell], **flags) -> tuple[list[float | None], NumericExtractFit]:
    state = _NMCM.fit(distinct_counts(col), flags, "missing_only")
    values = [_NMCM.apply_cell(state, cell)[0] for cell in col]
    return values, NumericExtractFit(lookup=state["lookup"], flags=state["flags"])


def nmc7_apply(fit: NumericExtractFit, col: list[Cell]) -> list[float | None]:
    state = {"lookup": fit.lookup, "flags": fit.flags}
    memo: dict[Cell, tuple] = {}
    out = []
    for cell in col:
        if cell not in memo:
            memo[cell] = _NMC7.apply_cell(state, cell)
        out.append(memo[cell][0])
    return out


def srch(col: list[Cell], spec: SearchSpec):
    """Per-term boolean columns (with labels) or a single ordinal column."""
    params = {
        "aggregate": spec.groups,
        "ordinal": spec.ordinal,
        "case_sensitive": spec.case_sensitive,
    }
    state = _SRCH.fit(distinct_counts(col), params, "missing_only")
    memo: dict[Cell, tuple] = {}
    rows = []
    for cell in col:
        if cell not in memo:
            memo[cell] = _SRCH.apply_cell(state, cell)
        rows.append(memo[cell])
    if spec.ordinal:
        return [r[0] for r in rows]
    return [[r[i] for r in rows] for i in range(len(state["groups"]))], list(state["labels"])
