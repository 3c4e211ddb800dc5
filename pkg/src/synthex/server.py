"""HTTP service hosting the pipeline: ingestion, extraction jobs, search and
statistics, and the annotation + curation workflow consumed by the web UI.

All endpoints live under /v1 and exchange JSON. The app factory takes the
store and gateway, so tests run the whole service on a replay or mock
transport without any network. If a built frontend exists, it is served
under /app.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import corpus as corpus_mod
from .curation import (
    AnnotationTask,
    CurationError,
    CurationState,
    agreement_merge,
    apply_verdicts,
    check_transition,
    diff_records,
    EXCLUSION_REASONS,
)
from .extractor import ExtractionConfig, Extractor
from .llmgate import Gateway, GatewayError
from .normalize import ranked_frequencies
from .promptkit import PromptTemplate, default_template
from .records import SLOTS, SynthesisRecord
from .retrieval import Demonstration, DemonstrationPool, bm25_scorer, build_index
from .searchql import QuerySyntaxError, parse, search
from .store import Store, StoreError


class DocumentIn(BaseModel):
    doi: str
    mof_ids: list[str]
    title: str = ""
    body: str


class DocumentsBody(BaseModel):
    records: list[DocumentIn]


class ExtractJobBody(BaseModel):
    mode: str = "few"
    k: int = 4
    algo: str = "bm25"
    model: str = "gpt-4-turbo"
    paragraph_ids: Optional[list[str]] = None
    max_workers: int = Field(default=4, ge=1, le=32)


class TaskCreateBody(BaseModel):
    paragraph_id: str
    annotators: list[str]


class DraftBody(BaseModel):
    annotator: str
    record: dict


class AdvanceBody(BaseModel):
    action: str
    payload: dict = Field(default_factory=dict)


def _record_from_payload(data: dict) -> SynthesisRecord:
    try:
        return SynthesisRecord.from_dict(
            {k: (v if v else None) for k, v in data.items()}
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=f"bad record: {exc}")


def load_pool(store: Store) -> DemonstrationPool:
    entries = []
    for _, raw in store.items("pool"):
        entries.append(
            Demonstration(
                id=raw["id"],
                paragraph=raw["paragraph"],
                gold=SynthesisRecord.from_dict(raw["gold"]),
                curation_state=raw.get("curation_state", "Finalized"),
            )
        )
    return DemonstrationPool(tuple(entries))


def create_app(
    store: Store,
    gateway: Gateway,
    template: PromptTemplate | None = None,
    frontend_dir: str | Path | None = None,
    model: str = "gpt-4-turbo",
) -> FastAPI:
    app = FastAPI(title="synthex", version="0.1.0")
    template = template or default_template()
    task_counter = itertools.count(1)
    job_counter = itertools.count(1)

    def fewshot_extractor(pool: DemonstrationPool) -> Extractor:
        scorer = bm25_scorer(build_index(pool)) if pool.n else None
        return Extractor(gateway, template, pool=pool, scorer=scorer)

    def zero_shot(paragraph_text: str, paragraph_id: str):
        extractor = Extractor(gateway, template)
        return extractor.extract(
            paragraph_text, paragraph_id, ExtractionConfig.zero_shot(model=model)
        )

    @app.exception_handler(StoreError)
    async def store_error(_, exc: StoreError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(CurationError)
    async def curation_error(_, exc: CurationError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    # -- documents -------------------------------------------------------------

    @app.post("/v1/documents")
    def post_documents(body: DocumentsBody):
        lines = [json.dumps(r.model_dump(), ensure_ascii=False) for r in body.records]
        existing = {doi for doi, _ in store.items("documents")}
        ingested = corpus_mod.ingest(iter(lines))
        added = []
        rejects = [{"line": r.line_no, "reason": r.reason} for r in ingested.rejects]
        for doc in ingested.documents:
            if doc.doi in existing:
                rejects.append({"line": None, "reason": f"duplicate doi {doc.doi} already stored"})
                continue
            store.put(
                "documents",
                doc.doi,
                {
                    "doi": doc.doi,
                    "mof_ids": list(doc.mof_ids),
                    "title": doc.title,
                    "body": doc.body,
                    "paragraph_ids": [p.id for p in doc.paragraphs],
                },
            )
            for p in doc.paragraphs:
                store.put(
                    "paragraphs",
                    p.id,
                    {
                        "id": p.id,
                        "doc_doi": p.doc_doi,
                        "index": p.index,
                        "text": p.text,
                        "char_span": list(p.char_span),
                    },
                )
            added.append(doc.doi)
        return {"added": added, "rejects": rejects}

    # -- extraction jobs ----------------------------------------------------------

    @app.post("/v1/jobs/extract")
    def post_extract_job(body: ExtractJobBody):
        if body.paragraph_ids is None:
            paragraph_ids = [pid for pid, _ in store.items("paragraphs")]
        else:
            paragraph_ids = body.paragraph_ids
        paragraphs = [(pid, store.require("paragraphs", pid)["text"]) for pid in paragraph_ids]

        job_id = f"job-{next(job_counter)}"
        job = {
            "job_id": job_id,
            "config": body.model_dump(),
            "status": "running",
            "progress": {"done": 0, "total": len(paragraphs), "unparseable": 0},
            "ledger": gateway.ledger.snapshot(),
            "result_ids": [],
        }
        store.put("jobs", job_id, job)

        pool = load_pool(store)
        if body.mode == "few" and pool.n == 0:
            config = ExtractionConfig.zero_shot(model=body.model)
            diagnostics = ["few-shot job fell back to zero-shot: demonstration pool is empty"]
        elif body.mode == "few":
            config = ExtractionConfig.few_shot(k=body.k, algo=body.algo, model=body.model)
            diagnostics = []
        else:
            config = ExtractionConfig.zero_shot(model=body.model)
            diagnostics = []
        extractor = fewshot_extractor(pool)

        def run_one(item):
            pid, text = item
            return extractor.extract(text, pid, config)

        with ThreadPoolExecutor(max_workers=body.max_workers) as pool_exec:
            results = list(pool_exec.map(run_one, paragraphs))

        unparseable = 0
        result_ids = []
        for res in sorted(results, key=lambda r: r.paragraph_id):
            paragraph = store.require("paragraphs", res.paragraph_id)
            doc = store.get("documents", paragraph["doc_doi"]) or {}
            store.put(
                "records",
                res.paragraph_id,
                {
                    "paragraph_id": res.paragraph_id,
                    "doi": paragraph["doc_doi"],
                    "title": doc.get("title", ""),
                    "paragraph": paragraph["text"],
                    "record": res.record.to_dict(),
                    "provenance": res.to_dict(),
                },
            )
            result_ids.append(res.paragraph_id)
            unparseable += 1 if res.unparseable else 0

        def finish(job_state: dict) -> dict:
            job_state["status"] = "done"
            job_state["progress"] = {
                "done": len(results),
                "total": len(paragraphs),
                "unparseable": unparseable,
            }
            job_state["ledger"] = gateway.ledger.snapshot()
            job_state["result_ids"] = result_ids
            job_state["diagnostics"] = diagnostics
            return job_state

        return store.mutate("jobs", job_id, finish)

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        return store.require("jobs", job_id)

    # -- search ---------------------------------------------------------------------

    @app.get("/v1/records")
    def get_records(
        query: str = Query(default=""),
        limit: int = Query(default=20, ge=0),
        offset: int = Query(default=0, ge=0),
    ):
        rows = []
        for pid, raw in store.items("records"):
            mapping: dict[str, str | None] = dict(raw["record"])
            mapping["title"] = raw.get("title", "")
            mapping["paragraph"] = raw.get("paragraph", "")
            mapping["doi"] = raw.get("doi", "")
            rows.append((pid, mapping))
        if not query.strip():
            total = len(rows)
            page = rows[offset : offset + limit]
            hits = [{"record_id": pid, "matched_fields": [], "snippets": {}} for pid, _ in page]
        else:
            try:
                ast = parse(query)
            except QuerySyntaxError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            found, total = search(rows, ast, limit=limit, offset=offset)
            hits = [
                {
                    "record_id": h.record_id,
                    "matched_fields": list(h.matched_fields),
                    "snippets": {k: list(v) for k, v in h.snippets.items()},
                }
                for h in found
            ]
        for hit in hits:
            raw = store.require("records", hit["record_id"])
            hit["record"] = raw["record"]
            hit["doi"] = raw["doi"]
            hit["title"] = raw["title"]
            hit["paragraph"] = raw["paragraph"]
        return {"hits": hits, "total": total, "limit": limit, "offset": offset}

    # -- statistics --------------------------------------------------------------------

    @app.get("/v1/stats")
    def get_stats(top: int = Query(default=10, ge=1)):
        records = [SynthesisRecord.from_dict(raw["record"]) for _, raw in store.items("records")]
        fill_rates = {}
        for slot in SLOTS:
            present = sum(1 for r in records if r.get(slot) is not None)
            fill_rates[slot] = (present / len(records)) if records else 0.0
        tables = {
            "metal": ranked_frequencies(
                r.metal_precursor_name for r in records if r.metal_precursor_name
            )[:top],
            "linker": ranked_frequencies(
                r.organic_linker_name for r in records if r.organic_linker_name
            )[:top],
            "solvent": ranked_frequencies(r.solvent_name for r in records if r.solvent_name)[:top],
        }
        return {
            "documents": store.count("documents"),
            "paragraphs": store.count("paragraphs"),
            "records": len(records),
            "pool_size": store.count("pool"),
            "tasks": store.count("tasks"),
            "fill_rates": fill_rates,
            "frequency_tables": {
                k: [{"name": n, "count": c} for n, c in v] for k, v in tables.items()
            },
        }

    # -- annotation tasks ------------------------------------------------------------------

    @app.post("/v1/annotations/tasks")
    def post_task(body: TaskCreateBody):
        paragraph = store.require("paragraphs", body.paragraph_id)
        if len(body.annotators) != 2:
            raise HTTPException(status_code=422, detail="exactly two annotators required")
        task_id = f"task-{next(task_counter)}"
        task = AnnotationTask(
            task_id=task_id,
            paragraph_id=body.paragraph_id,
            paragraph_text=paragraph["text"],
            annotators=(body.annotators[0], body.annotators[1]),
        )
        try:
            pre = zero_shot(paragraph["text"], body.paragraph_id)
            task.ai_preannotation = pre.record.to_dict()
        except GatewayError as exc:
            task.fewshot_diagnostics.append(f"AI pre-annotation unavailable: {exc}")
        store.put("tasks", task_id, task.to_dict())
        return task.to_dict()

    @app.get("/v1/annotations/tasks/{task_id}")
    def get_task(task_id: str, annotator: str = Query(default="")):
        raw = store.require("tasks", task_id)
        task = AnnotationTask.from_dict(raw)
        view = task.to_dict()
        # Role scoping: before agreement, an annotator sees only their own draft.
        if annotator and task.agreement is None:
            if annotator not in task.annotators:
                raise HTTPException(status_code=403, detail=f"unknown annotator {annotator!r}")
            view["drafts"] = {
                name: rec for name, rec in task.drafts.items() if name == annotator
            }
        return view

    @app.post("/v1/annotations/tasks/{task_id}/draft")
    def post_draft(task_id: str, body: DraftBody):
        record = _record_from_payload(body.record)

        def update(raw: dict) -> dict:
            task = AnnotationTask.from_dict(raw)
            if body.annotator not in task.annotators:
                raise CurationError(f"annotator {body.annotator!r} not assigned to this task")
            if task.state != CurationState.PRE_EXTRACTED.value:
                raise CurationError(f"drafts are closed in state {task.state}")
            task.drafts[body.annotator] = record.to_dict()
            return task.to_dict()

        return store.mutate("tasks", task_id, update)

    @app.post("/v1/annotations/tasks/{task_id}/agreement")
    def post_agreement(task_id: str):
        def update(raw: dict) -> dict:
            task = AnnotationTask.from_dict(raw)
            missing = [a for a in task.annotators if a not in task.drafts]
            if missing:
                raise CurationError(f"both drafts required; missing {missing}")
            draft_a = SynthesisRecord.from_dict(task.drafts[task.annotators[0]])
            draft_b = SynthesisRecord.from_dict(task.drafts[task.annotators[1]])
            result, merged = agreement_merge(draft_a, draft_b)
            task.agreement = result.to_dict()
            task.human_record = merged.to_dict()
            return task.to_dict()

        return store.mutate("tasks", task_id, update)

    # -- curation -----------------------------------------------------------------------------

    @app.post("/v1/curation/{task_id}/advance")
    def post_advance(task_id: str, body: AdvanceBody):
        if body.action == "exclude":
            return _exclude(task_id, body.payload)

        def update(raw: dict) -> dict:
            task = AnnotationTask.from_dict(raw)
            next_state = check_transition(task.state, body.action)
            if body.action == "human_pass":
                _do_human_pass(task, body.payload)
            elif body.action == "fewshot_check":
                _do_fewshot_check(task)
            elif body.action == "finalize":
                _do_finalize(task, body.payload)
            task.state = next_state
            return task.to_dict()

        updated = store.mutate("tasks", task_id, update)
        if updated["state"] == CurationState.FINALIZED.value:
            store.put(
                "pool",
                updated["paragraph_id"],
                {
                    "id": updated["paragraph_id"],
                    "paragraph": updated["paragraph_text"],
                    "gold": updated["final_record"],
                    "curation_state": "Finalized",
                    "task_id": updated["task_id"],
                },
            )
        return updated

    def _do_human_pass(task: AnnotationTask, payload: dict) -> None:
        if "record" in payload:
            task.human_record = _record_from_payload(payload["record"]).to_dict()
        if task.human_record is None:
            raise CurationError(
                "human_pass requires an agreement-merged record or a payload record"
            )

    def _do_fewshot_check(task: AnnotationTask) -> None:
        pool = load_pool(store)
        if pool.n == 0:
            config = ExtractionConfig.zero_shot(model=model)
            task.fewshot_diagnostics.append(
                "few-shot check fell back to zero-shot: demonstration pool is empty"
            )
        else:
            config = ExtractionConfig.few_shot(k=min(4, pool.n), model=model)
        extractor = fewshot_extractor(pool)
        result = extractor.extract(task.paragraph_text, task.paragraph_id, config)
        task.fewshot_record = result.record.to_dict()
        human = SynthesisRecord.from_dict(task.human_record)
        task.fewshot_diff = diff_records(human, result.record)

    def _do_finalize(task: AnnotationTask, payload: dict) -> None:
        human = SynthesisRecord.from_dict(task.human_record)
        ai = SynthesisRecord.from_dict(task.fewshot_record or {})
        verdicts = payload.get("verdicts", {})
        task.final_record = apply_verdicts(human, ai, verdicts).to_dict()

    def _exclude(task_id: str, payload: dict):
        reason = payload.get("reason_code")
        if reason not in EXCLUSION_REASONS:
            raise HTTPException(
                status_code=422, detail=f"reason_code must be one of {EXCLUSION_REASONS}"
            )

        def update(raw: dict) -> dict:
            task = AnnotationTask.from_dict(raw)
            if task.state == CurationState.FINALIZED.value:
                raise CurationError("finalized tasks are immutable")
            task.exclusion = {"reason_code": reason, "note": payload.get("note", "")}
            return task.to_dict()

        return store.mutate("tasks", task_id, update)

    # -- pool -------------------------------------------------------------------------------------

    @app.get("/v1/pool")
    def get_pool():
        entries = [raw for _, raw in store.items("pool")]
        return {"entries": entries, "n": len(entries)}

    # -- static frontend ----------------------------------------------------------------------------

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/app", StaticFiles(directory=str(frontend_dir), html=True), name="app")

    return app
