"""Fit/apply orchestration: recursive family-tree traversal, suffix-appender
header logging, fit-artifact serialization, inversion, and drift reporting.

Every transform is cell-local on its frozen train basis, so both fit and
apply evaluate each source column's step pipeline once per distinct value and
expand rows by lookup. Applying an artifact back to its own train table
reproduces the fit output bit-exactly.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import infill as infill_mod
from .encoders import CLASS_NUMERIC, auto_root_select
from .errors import ConfigError, DataError
from .registry import (
    BEHAVIORS,
    DOWNSTREAM_SLOTS,
    PRIMITIVE_SEMANTICS,
    UPSTREAM_SLOTS,
    Registry,
    builtin_registry,
    validate_registry,
)
from .tidytable import (
    COLTYPE_NUMERIC,
    Cell,
    TidyTable,
    canon_text,
    distinct_counts,
    infer_coltype,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
ARTIFACT_SUFFIX = ".pmz.json"


@dataclass
class Options:
    threshold: int = 255
    seed: int = 0
    labels_column: str | None = None
    passthrough_unassigned: bool = False
    shuffle_train: bool = False
    assignparam: dict = field(default_factory=dict)
    assigninfill: dict = field(default_factory=dict)
    max_depth: int = 16

    def to_jsonable(self) -> dict:
        return {
            "threshold": self.threshold,
            "seed": self.seed,
            "labels_column": self.labels_column,
            "passthrough_unassigned": self.passthrough_unassigned,
            "shuffle_train": self.shuffle_train,
            "assignparam": self.assignparam,
            "assigninfill": self.assigninfill,
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_jsonable(cls, doc: dict) -> "Options":
        return cls(**doc)


@dataclass
class StepRecord:
    """One transform application: category, header bookkeeping, frozen fit."""

    category: str
    suffix: str
    behavior: str
    input_header: str
    output_headers: list[str]
    fit: dict
    retained: bool = True

    def to_jsonable(self) -> dict:
        return {
            "category": self.category,
            "suffix": self.suffix,
            "behavior": self.behavior,
            "input_header": self.input_header,
            "output_headers": list(self.output_headers),
            "fit": self.fit,
            "retained": self.retained,
        }


@dataclass
class SourcePlan:
    """Fitted step DAG of one source column, as an ordered step list whose
    input headers always refer to the source or an earlier step's output."""

    header: str
    root: str
    target_rule: str
    steps: list[StepRecord]
    source_stats: dict

    def retained_headers(self) -> list[str]:
        return [h for rec in self.steps if rec.retained for h in rec.output_headers]

    def to_jsonable(self) -> dict:
        return {
            "root": self.root,
            "target_rule": self.target_rule,
            "steps": [rec.to_jsonable() for rec in self.steps],
            "source_stats": self.source_stats,
        }


@dataclass
class FitArtifact:
    """Serializable closure of an entire fit; replaying it on the original
    train table reproduces the fit output exactly."""

    format_version: int
    options: Options
    registry_snapshot: dict
    per_source: dict[str, SourcePlan]
    output_order: list[str]
    infill_spec: dict[str, dict]


@dataclass
class DriftReport:
    per_source: dict[str, dict]

    def to_jsonable(self) -> dict:
        return {"per_source": self.per_source}


def _resolve_params(opts: Options, category: str, source_header: str) -> dict:
    ap = opts.assignparam or {}
    params = dict(ap.get("global_assignparam", {}))
    params.update(ap.get("default_assignparam", {}).get(category, {}))
    params.update(ap.get(category, {}).get(source_header, {}))
    return params


def _source_stats(col: list[Cell]) -> dict:
    coltype = infer_coltype(col)
    if coltype == COLTYPE_NUMERIC:
        values = sorted(v for v in col if v is not None)
        total = len(values)
        mean = math.fsum(values) / total if total else 0.0
        var = math.fsum((v - mean) ** 2 for v in values) / total if total else 0.0
        return {"coltype": coltype, "total": total, "mean": mean, "std": math.sqrt(var)}
    freq: dict[str, int] = {}
    for cell in col:
        text = canon_text(cell)
        if text is not None:
            freq[text] = freq.get(text, 0) + 1
    top = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    return {
        "coltype": coltype,
        "total": sum(freq.values()),
        "top": [[entry, count] for entry, count in top],
        "uniques": sorted(freq),
    }


def _fit_source(header: str, col: list[Cell], root_key: str, reg: Registry,
                opts: Options, dedup) -> SourcePlan:
    counts = distinct_counts(col)
    root_rule = reg.entry(root_key).target_rule
    steps: list[StepRecord] = []

    def apply_category(cat_key: str, in_header: str, in_counts: dict):
        entry = reg.entry(cat_key)
        state = entry.behavior.fit(in_counts, _resolve_params(opts, cat_key, header), root_rule)
        out_headers = []
        for token in entry.behavior.output_tokens(state):
            base = f"{in_header}_{entry.suffix}" + (f"_{token}" if token else "")
            out_headers.append(dedup(base))
        rec = StepRecord(
            category=reg.resolve(cat_key),
            suffix=entry.suffix,
            behavior=entry.behavior.name,
            input_header=in_header,
            output_headers=out_headers,
            fit=state,
        )
        out_counts: list[dict] = [{} for _ in out_headers]
        for value, n in in_counts.items():
            outs = entry.behavior.apply_cell(state, value)
            for acc, v in zip(out_counts, outs):
                acc[v] = acc.get(v, 0) + n
        return rec, out_counts

    def run_generation(owner_key: str, in_header: str, in_counts: dict,
                       slots, depth: int) -> bool:
        if depth > opts.max_depth:
            raise ConfigError(
                f"family tree recursion exceeds max depth {opts.max_depth} at {owner_key!r}"
            )
        tree = reg.tree(owner_key)
        input_retained = not any(
            tree.slot(s) and not PRIMITIVE_SEMANTICS[s][1] for s in slots
        )
        for slot in slots:
            offspring = PRIMITIVE_SEMANTICS[slot][0]
            for cat in tree.slot(slot):
                rec, out_counts = apply_category(cat, in_header, in_counts)
                steps.append(rec)
                if offspring and reg.tree(cat).has_downstream():
                    for out_header, counts_out in zip(rec.output_headers, out_counts):
                        rec.retained = run_generation(
                            cat, out_header, counts_out, DOWNSTREAM_SLOTS, depth + 1
                        )
        return input_retained

    if run_generation(root_key, header, counts, UPSTREAM_SLOTS, 1):
        # Root generation had no replacement entries: keep the source itself.
        rec, _ = apply_category("excl", header, counts)
        steps.append(rec)
    return SourcePlan(
        header=header,
        root=reg.resolve(root_key),
        target_rule=root_rule,
        steps=steps,
        source_stats=_source_stats(col),
    )


def _expand_source(plan: SourcePlan, col: list[Cell]) -> dict[str, list[Cell]]:
    """Evaluate the pipeline once per distinct value and expand by lookup."""
    behaviors = [BEHAVIORS[rec.behavior] for rec in plan.steps]
    out_headers = plan.retained_headers()
    cache: dict[Cell, tuple] = {}
    for cell in set(col):
        env = {plan.header: cell}
        for rec, behavior in zip(plan.steps, behaviors):
            outs = behavior.apply_cell(rec.fit, env[rec.input_header])
            for h, v in zip(rec.output_headers, outs):
                env[h] = v
        cache[cell] = tuple(env[h] for h in out_headers)
    rows = [cache[cell] for cell in col]
    if not out_headers:
        return {}
    transposed = zip(*rows) if rows else [[] for _ in out_headers]
    return {h: list(vals) for h, vals in zip(out_headers, transposed)}


def _column_classes(plan: SourcePlan) -> dict[str, str]:
    classes = {}
    for rec in plan.steps:
        if rec.retained:
            for h in rec.output_headers:
                classes[h] = BEHAVIORS[rec.behavior].coltype_class
    return classes


def _infill_columns(plan: SourcePlan, col: list[Cell], columns: dict,
                    infill_spec: dict) -> None:
    kinds = {
        h: spec for h, spec in infill_spec.items()
        if h in columns and spec["kind"] != infill_mod.KIND_DEFAULT
    }
    if not kinds:
        return
    mask = infill_mod.mark_targets(col, plan.target_rule)
    for h, spec in kinds.items():
        columns[h] = infill_mod.apply_infill(columns[h], mask, spec["kind"], spec.get("value"))


def _fit_infill_spec(plan: SourcePlan, counts: dict, kind: str) -> dict[str, dict]:
    """Per retained column: requested kind where compatible, with train stats."""
    spec: dict[str, dict] = {}
    classes = _column_classes(plan)
    target = {
        value: infill_mod.is_infill_target(value, plan.target_rule) for value in counts
    }
    # Recompute per-distinct outputs to take statistics over non-target rows.
    behaviors = [BEHAVIORS[rec.behavior] for rec in plan.steps]
    out_headers = plan.retained_headers()
    per_header_pairs: dict[str, list] = {h: [] for h in out_headers}
    for value, n in counts.items():
        if target[value]:
            continue
        env = {plan.header: value}
        for rec, behavior in zip(plan.steps, behaviors):
            outs = behavior.apply_cell(rec.fit, env[rec.input_header])
            for h, v in zip(rec.output_headers, outs):
                env[h] = v
        for h in out_headers:
            per_header_pairs[h].append((env[h], n))
    for h in out_headers:
        if kind in infill_mod.NUMERIC_ONLY_KINDS and classes[h] != CLASS_NUMERIC:
            spec[h] = {"kind": infill_mod.KIND_DEFAULT}
            continue
        stat = infill_mod.train_stat(kind, per_header_pairs[h])
        entry = {"kind": kind}
        if stat is not None:
            entry["value"] = stat
        spec[h] = entry
    return spec


def _requested_infill(opts: Options) -> dict[str, str]:
    """source header -> canonical infill kind, from the assigninfill block."""
    requested: dict[str, str] = {}
    for name, headers in (opts.assigninfill or {}).items():
        kind = infill_mod.CONFIG_KIND_NAMES.get(name, name)
        if kind not in infill_mod.ALL_KINDS:
            raise ConfigError(f"unknown infill kind {name!r}")
        for h in headers:
            requested[h] = kind
    return requested


def fit(train: TidyTable, assignments: dict[str, str] | None = None,
        reg: Registry | None = None, opts: Options | None = None
        ) -> tuple[TidyTable, FitArtifact]:
    """Fit every source column's transform tree and encode the train table."""
    reg = reg if reg is not None else builtin_registry()
    opts = opts if opts is not None else Options()
    if not train.headers or train.row_count == 0:
        raise DataError("empty train table")
    diagnostics = validate_registry(reg, max_depth=opts.max_depth)
    if diagnostics:
        raise ConfigError("registry validation failed: " + "; ".join(diagnostics))
    assignments = dict(assignments or {})
    for h, key in assignments.items():
        if h not in train.headers:
            raise DataError(f"assigned header {h!r} not in table")
        if not reg.has(key):
            raise ConfigError(f"unknown transformation category {key!r}")
    if opts.labels_column is not None and opts.labels_column not in train.headers:
        raise DataError(f"labels column {opts.labels_column!r} not in table")
    requested_infill = _requested_infill(opts)
    for h in requested_infill:
        if h not in train.headers:
            raise ConfigError(f"assigninfill names unknown column {h!r}")

    sources = [h for h in train.headers if h != opts.labels_column]
    used_headers: set[str] = set()

    def dedup(base: str) -> str:
        name, i = base, 0
        while name in used_headers:
            i += 1
            name = f"{base}_{i}"
        used_headers.add(name)
        return name

    plans: dict[str, SourcePlan] = {}
    for h in sources:
        col = train.column(h)
        root = assignments.get(h)
        if root is None:
            root = "excl" if opts.passthrough_unassigned else auto_root_select(
                col, threshold=opts.threshold
            )
        plans[h] = _fit_source(h, col, root, reg, opts, dedup)

    infill_spec: dict[str, dict] = {}
    for h, plan in plans.items():
        kind = requested_infill.get(h, infill_mod.KIND_DEFAULT)
        if kind == infill_mod.KIND_DEFAULT:
            for out in plan.retained_headers():
                infill_spec[out] = {"kind": infill_mod.KIND_DEFAULT}
        else:
            infill_spec.update(_fit_infill_spec(plan, distinct_counts(train.column(h)), kind))

    artifact = FitArtifact(
        format_version=FORMAT_VERSION,
        options=opts,
        registry_snapshot=reg.snapshot(),
        per_source=plans,
        output_order=[h for plan in plans.values() for h in plan.retained_headers()],
        infill_spec=infill_spec,
    )
    encoded = _encode(artifact, train, warn_extra=False)
    if opts.shuffle_train:
        order = list(range(encoded.row_count))
        random.Random(opts.seed).shuffle(order)
        encoded = TidyTable(
            headers=encoded.headers,
            columns=[[col[i] for i in order] for col in encoded.columns],
        )
    return encoded, artifact


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PARSEMUNGE_THREADS", "1")))
    except ValueError:
        return 1


def _encode(artifact: FitArtifact, table: TidyTable, warn_extra: bool) -> TidyTable:
    missing = [h for h in artifact.per_source if h not in table.headers]
    if missing:
        raise DataError(f"table is missing required source columns: {missing}")
    if warn_extra:
        known = set(artifact.per_source) | {artifact.options.labels_column}
        extra = [h for h in table.headers if h not in known]
        if extra:
            logger.warning("ignoring columns not present at fit time: %s", extra)

    def encode_one(item):
        header, plan = item
        col = table.column(header)
        columns = _expand_source(plan, col)
        _infill_columns(plan, col, columns, artifact.infill_spec)
        return columns

    items = list(artifact.per_source.items())
    workers = _worker_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(encode_one, items))
    else:
        results = [encode_one(item) for item in items]
    combined: dict[str, list[Cell]] = {}
    for columns in results:
        combined.update(columns)
    return TidyTable(
        headers=list(artifact.output_order),
        columns=[combined[h] for h in artifact.output_order],
    )


def apply(artifact: FitArtifact, test: TidyTable) -> TidyTable:
    """Encode a table on the artifact's train basis; no statistic is refit."""
    return _encode(artifact, test, warn_extra=True)


def serialize(artifact: FitArtifact) -> bytes:
    """Canonical JSON bytes: sorted keys, shortest round-trip floats."""
    doc = {
        "format_version": artifact.format_version,
        "options": artifact.options.to_jsonable(),
        "registry_snapshot": artifact.registry_snapshot,
        "per_source": {h: plan.to_jsonable() for h, plan in artifact.per_source.items()},
        "output_order": list(artifact.output_order),
        "infill_spec": artifact.infill_spec,
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, allow_nan=False,
                      separators=(",", ":")).encode("utf-8")


def deserialize(data: bytes | str) -> FitArtifact:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed artifact document: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError("malformed artifact document: not an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"unsupported artifact format_version {version!r}, expected {FORMAT_VERSION}"
        )
    Registry.from_snapshot(doc.get("registry_snapshot", {}))
    per_source = {}
    for header, plan_doc in doc.get("per_source", {}).items():
        steps = []
        for s in plan_doc.get("steps", []):
            if s["behavior"] not in BEHAVIORS:
                raise DataError(f"artifact references unknown behavior {s['behavior']!r}")
            steps.append(StepRecord(
                category=s["category"],
                suffix=s["suffix"],
                behavior=s["behavior"],
                input_header=s["input_header"],
                output_headers=list(s["output_headers"]),
                fit=s["fit"],
                retained=s["retained"],
            ))
        per_source[header] = SourcePlan(
            header=header,
            root=plan_doc["root"],
            target_rule=plan_doc["target_rule"],
            steps=steps,
            source_stats=plan_doc.get("source_stats", {}),
        )
    return FitArtifact(
        format_version=version,
        options=Options.from_jsonable(doc.get("options", {})),
        registry_snapshot=doc.get("registry_snapshot", {}),
        per_source=per_source,
        output_order=list(doc.get("output_order", [])),
        infill_spec=doc.get("infill_spec", {}),
    )


_INVERT_PREFERENCE = {"1010": 0, "onht": 1, "bnry": 2, "ord3": 3, "mnmx": 4, "nmbr": 5}


def invert(artifact: FitArtifact, encoded: TidyTable,
           sources: list[str] | None = None) -> tuple[TidyTable, list[str]]:
    """Recover source columns from encoded data where an invertible path exists.

    Returns the recovered table plus the list of non-invertible sources.
    Sources reached through an uppercase step recover the uppercased form.
    """
    wanted = list(sources) if sources is not None else list(artifact.per_source)
    for h in wanted:
        if h not in artifact.per_source:
            raise DataError(f"unknown source column {h!r}")
    headers, columns, failed = [], [], []
    for header in wanted:
        plan = artifact.per_source[header]
        producer = {
            out: rec for rec in plan.steps for out in rec.output_headers
        }
        candidates = []
        for i, rec in enumerate(plan.steps):
            behavior = BEHAVIORS[rec.behavior]
            if not rec.retained or not behavior.invertible:
                continue
            cur, clean = rec.input_header, True
            while cur != plan.header:
                parent = producer[cur]
                if not BEHAVIORS[parent.behavior].inversion_pass:
                    clean = False
                    break
                cur = parent.input_header
            if clean and all(h in encoded.headers for h in rec.output_headers):
                candidates.append((_INVERT_PREFERENCE.get(rec.behavior, 99), i, rec))
        if not candidates:
            failed.append(header)
            continue
        rec = min(candidates)[2]
        decode = BEHAVIORS[rec.behavior].decoder(rec.fit)
        cols = [encoded.column(h) for h in rec.output_headers]
        narw = _retained_narw(plan, encoded)
        recovered = []
        for r in range(encoded.row_count):
            if narw is not None and narw[r] == 1.0:
                recovered.append(None)
            else:
                recovered.append(decode(tuple(c[r] for c in cols)))
        headers.append(header)
        columns.append(recovered)
    if sources is not None and failed:
        raise DataError(f"no invertible path for sources: {failed}")
    return TidyTable(headers=headers, columns=columns), failed


def _retained_narw(plan: SourcePlan, encoded: TidyTable):
    for rec in plan.steps:
        if (rec.behavior == "NArw" and rec.retained
                and rec.input_header == plan.header
                and rec.output_headers[0] in encoded.headers):
            return encoded.column(rec.output_headers[0])
    return None


def drift_report(artifact: FitArtifact, new: TidyTable) -> DriftReport:
    """Train-basis stats vs new-data stats, per source column."""
    per_source = {}
    for header, plan in artifact.per_source.items():
        base = plan.source_stats
        col = new.column(header)
        fresh = _source_stats(col)
        if base.get("coltype") == COLTYPE_NUMERIC:
            per_source[header] = {
                "kind": "numeric",
                "train": {"mean": base["mean"], "std": base["std"], "total": base["total"]},
                "new": {"mean": fresh.get("mean", 0.0), "std": fresh.get("std", 0.0),
                        "total": fresh.get("total", 0)},
                "deltas": {
                    "mean": abs(fresh.get("mean", 0.0) - base["mean"]),
                    "std": abs(fresh.get("std", 0.0) - base["std"]),
                },
            }
        else:
            train_total = max(base.get("total", 0), 1)
            new_freq: dict[str, int] = {}
            unseen = 0
            total = 0
            known = set(base.get("uniques", []))
            for cell in col:
                text = canon_text(cell)
                if text is None:
                    continue
                total += 1
                new_freq[text] = new_freq.get(text, 0) + 1
                if text not in known:
                    unseen += 1
            new_total = max(total, 1)
            top = {}
            for entry, count in base.get("top", []):
                train_prop = count / train_total
                new_prop = new_freq.get(entry, 0) / new_total
                top[entry] = {
                    "train": train_prop,
                    "new": new_prop,
                    "delta": abs(new_prop - train_prop),
                }
            per_source[header] = {
                "kind": "categoric",
                "top": top,
                "unseen_rate": (unseen / total) if total else 0.0,
                "train_total": base.get("total", 0),
                "new_total": total,
            }
    return DriftReport(per_source=per_source)
