"""
Prompt assembly and few-shot extraction against a mock model
============================================================

Shows the assembled prompt layout (background knowledge, ordered shots,
query, output schema), runs an extraction through the gateway, and parses
the reply into a validated ten-slot record.
"""

from synthex.extractor import ExtractionConfig, Extractor, parse_output
from synthex.llmgate import Gateway, MockTransport
from synthex.promptkit import default_template, record_to_completion
from synthex.records import SynthesisRecord
from synthex.retrieval import Demonstration, DemonstrationPool, bm25_scorer, build_index

pool = DemonstrationPool(
    (
        Demonstration(
            id="p1",
            paragraph="ZrCl4 (0.23 g) and terephthalic acid were dissolved in DMF and heated.",
            gold=SynthesisRecord(
                metal_precursor_name="ZrCl4", organic_linker_name="terephthalic acid",
                solvent_name="DMF",
            ),
        ),
        Demonstration(
            id="p2",
            paragraph="Cu(NO3)2·3H2O and trimesic acid were suspended in water at 85 °C.",
            gold=SynthesisRecord(
                metal_precursor_name="Cu(NO3)2·3H2O", organic_linker_name="trimesic acid",
                solvent_name="water",
            ),
        ),
    )
)

# The mock answers with a JSON object wrapped in prose, as real models do.
reply = SynthesisRecord(
    metal_precursor_name="Zn(NO3)2·6H2O",
    organic_linker_name="terephthalic acid",
    solvent_name="DMF",
    reaction_duration="72 h",
    reaction_temperature="120 °C",
)
gateway = Gateway(MockTransport(lambda r: "Sure! " + record_to_completion(reply)))

extractor = Extractor(
    gateway, default_template(), pool=pool, scorer=bm25_scorer(build_index(pool))
)
query = "Zn(NO3)2·6H2O and terephthalic acid were dissolved in DMF and heated at 120 °C for 72 h."

prompt, shots = extractor.build_prompt(query, None, ExtractionConfig.few_shot(k=2))
print("=== system text ===")
print(prompt.system_text[:400], "...")
print(f"\n=== user text ({prompt.shot_count} shots, ~{prompt.token_estimate} tokens) ===")
print(prompt.user_text[:600], "...")

result = extractor.extract(query, "query-1", ExtractionConfig.few_shot(k=2))
print("\nextracted record:")
for slot, value in result.record.to_dict().items():
    print(f"  {slot:28s} {value}")
print("shot ids:", result.shot_ids)

# The parser is tolerant: unknown fields are diagnosed, nulls mean absent.
messy = '{"solvent_name": "DMF", "catalyst": "none", "modulator_name": null}'
record, diagnostics = parse_output(messy)
print("\ntolerant parse:", record.solvent_name, "| diagnostics:", diagnostics)
