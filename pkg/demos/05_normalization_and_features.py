"""
Post-processing: name clustering, unit standardization, and feature export
==========================================================================

Cleans raw condition strings, clusters spelling variants by edit-distance
similarity, merges synonyms with a (mocked) model plus reflection round,
standardizes times and temperatures, filters to head-of-distribution names,
and exports the indicator-feature table.
"""

import json
import tempfile
from pathlib import Path

from synthex.llmgate import Gateway, MockTransport
from synthex.normalize import (
    CanonicalMap,
    FrequencyFilter,
    apply_frequency_filter,
    clean_special_chars,
    cluster_by_threshold,
    export_features,
    merge_synonyms_llm,
    similarity_ratio,
    standardize_temperature,
    standardize_time,
)
from synthex.records import SynthesisRecord

# Edit-distance similarity on a 0..100 scale; 90 is the clustering threshold.
print(similarity_ratio("Cd(NO3)2.4H2O", "Cd(NO3)2?4H2O"))  # 92.3: same cluster
print(similarity_ratio("water", "ethanol"))                 # far apart

names = ["Cd(NO3)2.4H2O", "Cd(NO3)2.4H2O", "Cd(NO3)2?4H2O", "water"]
clusters = cluster_by_threshold(names, threshold=90)
for c in clusters:
    print(f"  cluster canonical={c.canonical!r} members={c.members}")

cmap = CanonicalMap.from_clusters(clusters)
print("canonical for mojibake:", cmap.canonical("Cd(NO3)2?4H2O"))

# Synonym merging: a grouping round then a reflection round; names under the
# per-category frequency floor pass through untouched.
replies = iter([json.dumps([["H2O", "Water"]]), json.dumps([["H2O", "Water"]])])
gateway = Gateway(MockTransport(lambda r: next(replies)))
solvent_names = ["H2O"] * 6 + ["Water"] * 5 + ["rare solvent"]
merged, diagnostics = merge_synonyms_llm(solvent_names, "solvent", gateway)
for c in merged:
    print(f"  {c.provenance:13s} {c.canonical!r} <- {c.members}")

# Unit standardization is total on its grammar and flags everything else.
for text in ("72 h", "30 min", "3 days", "overnight", "a little while"):
    value, diagnostic = standardize_time(text)
    print(f"  {text!r:18s} -> {value.magnitude if value else None} h  {diagnostic or ''}")
for text in ("room temperature", "393 K", "120 °C", "warm"):
    value, diagnostic = standardize_temperature(text)
    print(f"  {text!r:20s} -> {value.magnitude if value else None} °C  {diagnostic or ''}")

print(clean_special_chars(" DMF ,"))  # edge punctuation and spaces stripped

# Frequency filter + feature export.
records = [
    (f"r{i}", SynthesisRecord(
        metal_precursor_name="Zn(NO3)2·6H2O" if i % 2 else "Cu(NO3)2·3H2O",
        organic_linker_name="terephthalic acid",
        solvent_name="DMF",
        reaction_duration="72 h",
        reaction_temperature="120 °C",
    ))
    for i in range(6)
]
kept, tables = apply_frequency_filter(records, FrequencyFilter(100, 135, 20))
print("\nmetal frequency table:", tables["metal"])

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "features.csv"
    manifest = export_features(kept, out, Path(tmp) / "manifest.json")
    print("feature columns:", manifest["columns"])
    print(out.read_text().splitlines()[1])
