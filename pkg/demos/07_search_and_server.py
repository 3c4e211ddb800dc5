"""
Query language and the HTTP service
===================================

Parses boolean field queries over extraction records, then walks the whole
annotation + curation loop against an in-process server instance (no network,
mock model).
"""

import json

from fastapi.testclient import TestClient

from synthex.llmgate import Gateway, MockTransport
from synthex.promptkit import record_to_completion
from synthex.records import SynthesisRecord
from synthex.searchql import evaluate, format_query, parse
from synthex.server import create_app
from synthex.store import Store

# NOT binds tighter than AND, which binds tighter than OR.
ast = parse('metal:"zinc nitrate" AND NOT solvent:DMF OR duration:72')
print(format_query(ast))

record = {
    "metal_precursor_name": "zinc nitrate hexahydrate",
    "solvent_name": "ethanol",
    "reaction_duration": "72 h",
    "paragraph": "crystals were heated",
    "title": "t",
    "doi": "10.1/z",
}
print("matches:", evaluate(ast, record))

# --- the service ---------------------------------------------------------------

paragraph = (
    "Zn(NO3)2·6H2O (0.30 g) and terephthalic acid (0.17 g) were dissolved in hot water "
    "and heated at 120 °C for 72 h."
)
ai_says = SynthesisRecord(
    metal_precursor_name="Zn(NO3)2·6H2O",
    organic_linker_name="terephthalic acid",
    solvent_name="hot water",  # the human will correct this below
    reaction_duration="72 h",
    reaction_temperature="120 °C",
)
app = create_app(Store(), Gateway(MockTransport(lambda r: record_to_completion(ai_says))))
client = TestClient(app)

client.post("/v1/documents", json={"records": [
    {"doi": "10.9/demo", "mof_ids": ["MOF-X"], "title": "demo", "body": paragraph}
]})

task = client.post("/v1/annotations/tasks", json={
    "paragraph_id": "10.9/demo#p0", "annotators": ["ana", "ben"],
}).json()
print("\nAI pre-annotation solvent:", task["ai_preannotation"]["solvent_name"])

human = ai_says.replace(solvent_name="water").to_dict()
for annotator in ("ana", "ben"):
    client.post(f"/v1/annotations/tasks/{task['task_id']}/draft",
                json={"annotator": annotator, "record": human})
agreement = client.post(f"/v1/annotations/tasks/{task['task_id']}/agreement").json()
print("paper valid:", agreement["agreement"]["paper_valid"])

advance = lambda action, payload={}: client.post(
    f"/v1/curation/{task['task_id']}/advance", json={"action": action, "payload": payload}
).json()
print("->", advance("human_pass")["state"])
checked = advance("fewshot_check")
print("->", checked["state"], "| diff:", checked["fewshot_diff"])
final = advance("finalize", {"verdicts": {"solvent_name": {"choice": "accept-human"}}})
print("->", final["state"])

print("\npool:", json.dumps(client.get("/v1/pool").json(), indent=2)[:200], "...")

# Extraction job over the stored paragraph, then a field search.
client.post("/v1/jobs/extract", json={"mode": "zero"})
hits = client.get("/v1/records", params={"query": "metal:Zn AND solvent:water"}).json()
print("search total:", hits["total"], "| matched fields:", hits["hits"][0]["matched_fields"])
print("stats:", json.dumps(client.get("/v1/stats").json()["fill_rates"])[:100], "...")
