"""Post-processing of raw extracted conditions.

Edit-distance similarity clustering seeds name disambiguation; an LLM pass
with a reflection round merges remaining synonyms; time and temperature are
standardized to hours and Celsius; frequency filters keep the head of each
name distribution; and the survivors export as an indicator-feature table.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .llmgate import ChatRequest, Gateway, GatewayError
from .records import SynthesisRecord

#: Minimum name frequency for LLM synonym merging, per category.
SYNONYM_FREQUENCY_FLOORS = {"metal": 8, "linker": 4, "solvent": 5}

#: Default head-of-distribution cutoffs (metal, linker, solvent).
DEFAULT_FREQUENCY_FILTER = (100, 135, 20)

GROUPING_SYSTEM = (
    "You group chemical substance names that refer to the same substance. Given a JSON "
    "array of names, return a JSON array of arrays, where each inner array lists names "
    "of one substance. Every input name must appear in exactly one group."
)

REFLECTION_SYSTEM = (
    "You re-evaluate a proposed grouping of chemical substance names. Check that the "
    "names inside each group truly denote one substance and that no two groups denote "
    "the same substance; split or merge groups as needed. Return the corrected JSON "
    "array of arrays. Every input name must appear in exactly one group."
)


class NormalizeError(Exception):
    pass


# --- Levenshtein similarity ----------------------------------------------------


def levenshtein(a: str, b: str) -> int:
    """Classic two-row dynamic program; insert/delete/substitute all cost 1."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def similarity_ratio(a: str, b: str) -> float:
    """(1 - distance / max length) * 100; two empty strings count as identical."""
    if not a and not b:
        return 100.0
    return (1 - levenshtein(a, b) / max(len(a), len(b))) * 100


@dataclass(frozen=True)
class Cluster:
    canonical: str
    members: tuple[str, ...]
    provenance: str  # "edit_distance" | "llm" | "passthrough"


def _pick_canonical(members: Iterable[str], frequencies: Counter) -> str:
    """Most frequent member wins; ties go to the lexicographically smallest."""
    return min(members, key=lambda m: (-frequencies[m], m))


def cluster_by_threshold(names: Sequence[str], threshold: float = 90.0) -> list[Cluster]:
    """Single-linkage clusters over pairs with similarity >= threshold.

    ``names`` may contain duplicates; duplicates vote for the canonical member.
    Output is deterministic: clusters sorted by canonical name.
    """
    if not 0 < threshold <= 100:
        raise NormalizeError("threshold must be in (0, 100]")
    frequencies = Counter(names)
    unique = sorted(frequencies)
    parent = {name: name for name in unique}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: str, y: str) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for i, a in enumerate(unique):
        for b in unique[i + 1 :]:
            if similarity_ratio(a, b) >= threshold:
                union(a, b)

    groups: dict[str, list[str]] = {}
    for name in unique:
        groups.setdefault(find(name), []).append(name)
    clusters = [
        Cluster(
            canonical=_pick_canonical(members, frequencies),
            members=tuple(sorted(members)),
            provenance="edit_distance",
        )
        for members in groups.values()
    ]
    return sorted(clusters, key=lambda c: c.canonical)


@dataclass
class CanonicalMap:
    """raw name -> canonical name; canonical names map to themselves."""

    mapping: dict[str, str] = field(default_factory=dict)
    clusters: list[Cluster] = field(default_factory=list)

    @classmethod
    def from_clusters(cls, clusters: Sequence[Cluster]) -> "CanonicalMap":
        mapping: dict[str, str] = {}
        for cluster in clusters:
            for member in cluster.members:
                if member in mapping and mapping[member] != cluster.canonical:
                    raise NormalizeError(f"clusters are not disjoint at {member!r}")
                mapping[member] = cluster.canonical
            mapping[cluster.canonical] = cluster.canonical
        return cls(mapping=mapping, clusters=list(clusters))

    def canonical(self, name: str) -> str:
        return self.mapping.get(name, name)


# --- LLM synonym merging ---------------------------------------------------------


def _parse_groups(text: str, expected: set[str]) -> tuple[list[list[str]], list[str]]:
    """Validate an LLM grouping reply into a partition of the expected names."""
    diagnostics: list[str] = []
    match = re.search(r"\[.*\]", text, flags=re.DOTALL)
    if not match:
        raise NormalizeError("no JSON array in grouping reply")
    value = json.loads(match.group(0))
    if not isinstance(value, list):
        raise NormalizeError("grouping reply is not an array")
    groups: list[list[str]] = []
    seen: set[str] = set()
    for item in value:
        members = [m for m in (item if isinstance(item, list) else [item]) if isinstance(m, str)]
        kept = []
        for m in members:
            if m not in expected:
                diagnostics.append(f"dropped invented name {m!r}")
            elif m in seen:
                diagnostics.append(f"dropped duplicated name {m!r}")
            else:
                kept.append(m)
                seen.add(m)
        if kept:
            groups.append(kept)
    for missing in sorted(expected - seen):
        diagnostics.append(f"name {missing!r} missing from reply; kept as singleton")
        groups.append([missing])
    return groups, diagnostics


def merge_synonyms_llm(
    names: Sequence[str],
    category: str,
    gateway: Gateway,
    model: str = "gpt-4-turbo",
) -> tuple[list[Cluster], list[str]]:
    """Two LLM rounds (grouping, then reflection) over frequent names.

    Names below the per-category frequency floor pass through ungrouped. On
    LLM failure the edit-distance clusters stand in, with a diagnostic.
    """
    if category not in SYNONYM_FREQUENCY_FLOORS:
        raise NormalizeError(f"category must be one of {sorted(SYNONYM_FREQUENCY_FLOORS)}")
    floor = SYNONYM_FREQUENCY_FLOORS[category]
    frequencies = Counter(names)
    eligible = sorted(n for n, c in frequencies.items() if c >= floor)
    rare = sorted(n for n, c in frequencies.items() if c < floor)
    diagnostics: list[str] = []

    clusters: list[Cluster] = []
    if eligible:
        payload = json.dumps(eligible, ensure_ascii=False)
        try:
            first = gateway.complete(
                ChatRequest(model=model, system=GROUPING_SYSTEM, user=payload)
            )
            groups, diag1 = _parse_groups(first.text, set(eligible))
            reflected = gateway.complete(
                ChatRequest(
                    model=model,
                    system=REFLECTION_SYSTEM,
                    user=json.dumps(groups, ensure_ascii=False),
                )
            )
            groups, diag2 = _parse_groups(reflected.text, set(eligible))
            diagnostics.extend(diag1 + diag2)
            clusters = [
                Cluster(
                    canonical=_pick_canonical(g, frequencies),
                    members=tuple(sorted(g)),
                    provenance="llm",
                )
                for g in groups
            ]
        except (GatewayError, NormalizeError, json.JSONDecodeError) as exc:
            diagnostics.append(f"llm synonym merge failed ({exc}); edit-distance fallback")
            clusters = [
                Cluster(c.canonical, c.members, "edit_distance")
                for c in cluster_by_threshold(
                    [n for n in names if frequencies[n] >= floor]
                )
            ]
    clusters.extend(Cluster(canonical=n, members=(n,), provenance="passthrough") for n in rare)
    return sorted(clusters, key=lambda c: c.canonical), diagnostics


# --- unit standardization ---------------------------------------------------------


@dataclass(frozen=True)
class UnitValue:
    magnitude: float
    unit: str  # "h" for durations, "degC" for temperatures
    original: str
    idiom: str | None = None  # set when a documented idiom supplied the value


_TIME_RE = re.compile(
    r"^\s*(\d+(?:\.\d+)?)\s*(min(?:ute)?s?|h(?:ou)?rs?|h|d|days?)\s*\.?\s*$",
    re.IGNORECASE,
)
_TIME_FACTORS = {"min": 1 / 60, "h": 1.0, "d": 24.0}

_TEMP_RE = re.compile(
    r"^\s*(-?\d+(?:\.\d+)?)\s*(°?\s*C|℃|K|°?\s*F)\s*\.?\s*$",
)
_ROOM_TEMP_RE = re.compile(r"^\s*(room\s+temperature|r\.?t\.?)\s*$", re.IGNORECASE)


def _time_unit_key(unit: str) -> str:
    u = unit.lower()
    if u.startswith("min"):
        return "min"
    if u.startswith("d"):
        return "d"
    return "h"


def standardize_time(text: str | None) -> tuple[UnitValue | None, str | None]:
    """Parse a duration into hours. Outside the grammar -> (None, diagnostic)."""
    if text is None:
        return None, None
    if text.strip().lower() == "overnight":
        # Documented idiom: overnight counts as 12 h, flagged in the output.
        return UnitValue(12.0, "h", text, idiom="overnight"), None
    match = _TIME_RE.match(text)
    if not match:
        return None, f"unparseable duration: {text!r}"
    value = float(match.group(1))
    factor = _TIME_FACTORS[_time_unit_key(match.group(2))]
    return UnitValue(value * factor, "h", text), None


def standardize_temperature(text: str | None) -> tuple[UnitValue | None, str | None]:
    """Parse a temperature into Celsius. Outside the grammar -> (None, diagnostic)."""
    if text is None:
        return None, None
    if _ROOM_TEMP_RE.match(text):
        return UnitValue(25.0, "degC", text, idiom="room temperature"), None
    match = _TEMP_RE.match(text)
    if not match:
        return None, f"unparseable temperature: {text!r}"
    value = float(match.group(1))
    unit = match.group(2).replace("°", "").replace(" ", "")
    if unit in ("C", "℃"):
        celsius = value
    elif unit == "K":
        celsius = value - 273.15
    else:  # F
        celsius = (value - 32) * 5 / 9
    return UnitValue(celsius, "degC", text), None


# --- special-character cleaning ------------------------------------------------------

#: Documented cleaning table: each rule applies until a fixed point.
_UNICODE_SPACES = dict.fromkeys(map(ord, "       "), " ")
_STRIP_CHARS = " \t\r\n,;:!?\"'`“”‘’«»"


def clean_special_chars(text: str) -> str:
    """Normalize unicode spaces, collapse whitespace, strip stray edge punctuation."""
    out = text.translate(_UNICODE_SPACES)
    out = re.sub(r"\s+", " ", out).strip()
    out = out.strip(_STRIP_CHARS)
    return out


# --- frequency filtering and export -----------------------------------------------------


@dataclass(frozen=True)
class FrequencyFilter:
    metal_top: int
    linker_top: int
    solvent_top: int

    def __post_init__(self) -> None:
        if min(self.metal_top, self.linker_top, self.solvent_top) <= 0:
            raise ValueError("frequency cutoffs must be positive")


def ranked_frequencies(values: Iterable[str]) -> list[tuple[str, int]]:
    """(name, count) sorted by count descending, ties lexicographic ascending."""
    counts = Counter(values)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def apply_frequency_filter(
    records: Sequence[tuple[str, SynthesisRecord]],
    cutoffs: FrequencyFilter,
) -> tuple[list[tuple[str, SynthesisRecord]], dict[str, list[tuple[str, int]]]]:
    """Keep records whose metal/linker/solvent names all sit inside the top-N lists.

    Records with a missing category name cannot rank and are excluded. Returns
    the survivors plus the ranked frequency table per category.
    """
    tables = {
        "metal": ranked_frequencies(
            r.metal_precursor_name for _, r in records if r.metal_precursor_name
        ),
        "linker": ranked_frequencies(
            r.organic_linker_name for _, r in records if r.organic_linker_name
        ),
        "solvent": ranked_frequencies(r.solvent_name for _, r in records if r.solvent_name),
    }
    tops = {
        "metal": {name for name, _ in tables["metal"][: cutoffs.metal_top]},
        "linker": {name for name, _ in tables["linker"][: cutoffs.linker_top]},
        "solvent": {name for name, _ in tables["solvent"][: cutoffs.solvent_top]},
    }
    kept = [
        (rid, r)
        for rid, r in records
        if r.metal_precursor_name in tops["metal"]
        and r.organic_linker_name in tops["linker"]
        and r.solvent_name in tops["solvent"]
    ]
    return kept, tables


def apply_canonical_map(record: SynthesisRecord, maps: dict[str, CanonicalMap]) -> SynthesisRecord:
    """Rewrite the three category names through their canonical maps."""
    changes: dict[str, str | None] = {}
    if record.metal_precursor_name and "metal" in maps:
        changes["metal_precursor_name"] = maps["metal"].canonical(record.metal_precursor_name)
    if record.organic_linker_name and "linker" in maps:
        changes["organic_linker_name"] = maps["linker"].canonical(record.organic_linker_name)
    if record.solvent_name and "solvent" in maps:
        changes["solvent_name"] = maps["solvent"].canonical(record.solvent_name)
    return record.replace(**changes) if changes else record


def export_features(
    records: Sequence[tuple[str, SynthesisRecord]],
    out_csv: str | Path,
    manifest_path: str | Path | None = None,
) -> dict:
    """Write one row per record: name indicators plus standardized numerics.

    Indicator columns cover every name present in the filtered records; the
    manifest sidecar documents the column layout for downstream tooling.
    Absent numerics stay empty, never zero.
    """
    metals = sorted({r.metal_precursor_name for _, r in records if r.metal_precursor_name})
    linkers = sorted({r.organic_linker_name for _, r in records if r.organic_linker_name})
    solvents = sorted({r.solvent_name for _, r in records if r.solvent_name})
    indicator_cols = (
        [f"metal::{m}" for m in metals]
        + [f"linker::{l}" for l in linkers]
        + [f"solvent::{s}" for s in solvents]
    )
    numeric_cols = ["reaction_duration_h", "reaction_temperature_c"]
    header = ["record_id"] + indicator_cols + numeric_cols

    out_csv = Path(out_csv)
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rid, record in records:
            row: list[str] = [rid]
            row += ["1" if record.metal_precursor_name == m else "0" for m in metals]
            row += ["1" if record.organic_linker_name == l else "0" for l in linkers]
            row += ["1" if record.solvent_name == s else "0" for s in solvents]
            duration, _ = standardize_time(record.reaction_duration)
            temperature, _ = standardize_temperature(record.reaction_temperature)
            row.append("" if duration is None else repr(duration.magnitude))
            row.append("" if temperature is None else repr(temperature.magnitude))
            writer.writerow(row)

    manifest = {
        "columns": header,
        "indicator_columns": {
            "metal": [f"metal::{m}" for m in metals],
            "linker": [f"linker::{l}" for l in linkers],
            "solvent": [f"solvent::{s}" for s in solvents],
        },
        "numeric_columns": numeric_cols,
        "rows": len(records),
    }
    if manifest_path is not None:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return manifest
