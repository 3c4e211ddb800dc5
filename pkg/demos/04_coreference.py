"""
Coreference resolution for proxy linker names
=============================================

Articles often shorten a linker to "L", "H2L", "L1" after defining it once.
The hybrid resolver asks the model for proxy definitions in the text before
the synthesis paragraph, then rewrites proxies by exact lookup.
"""

import json

from synthex.coref import detect_proxies, harvest_anaphors, resolve, ResolutionReport
from synthex.corpus import ingest
from synthex.llmgate import Gateway, MockTransport
from synthex.records import SynthesisRecord

body = (
    "We prepared the ligand 2-aminoterephthalic acid (H2L) by a literature route.\n\n"
    "Cd(NO3)2·4H2O (0.31 g) and H2L (0.18 g) were dissolved in DMF and heated at 100 °C."
)
doc = ingest([json.dumps({"doi": "10.1/coref", "mof_ids": ["M"], "title": "t", "body": body})]).documents[0]

# The proxy recognizer is token-anchored: "mL" and "HCl" never match.
print(detect_proxies("H2L (0.18 g)"))      # ['H2L']
print(detect_proxies("10 mL of HCl"))       # []
print(detect_proxies("L1 and L2 mixed"))    # ['L1', 'L2']

# Harvest definitions from everything before the synthesis paragraph.
gateway = Gateway(MockTransport(lambda r: json.dumps({"H2L": "2-aminoterephthalic acid"})))
table = harvest_anaphors(doc, synthesis_index=1, gateway=gateway)
print("\nanaphor table:", table.entries)

record = SynthesisRecord(organic_linker_name="H2L", solvent_name="DMF")
resolved, unresolved = resolve(record, table)
print("resolved linker:", resolved.organic_linker_name)
print("unresolved:", unresolved)

# Resolution is idempotent and tracked per proxy word.
again, _ = resolve(resolved, table)
assert again == resolved

report = ResolutionReport()
report.observe(["H2L"], [])
report.observe(["L9"], ["L9"])  # no definition for L9 anywhere
print("\nper-proxy table:")
for row in report.table_rows():
    print(f"  {row['proxy_word']:5s} occurrences={row['occurrence_count']} "
          f"resolved={row['resolution_count']} ratio={row['resolution_ratio']:.0%}")
print("occurrence resolution rate:", report.occurrence_resolution_rate())
print("unresolved per paragraph:", report.unresolved_per_paragraph())
