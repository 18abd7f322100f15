"""HTTP surface: live suggestions plus the feedback-capture loop.

Suggest is read-only over an immutable model bundle; feedback is appended and
fsynced to the feedback file before the request is acknowledged, so an
acknowledged triple survives a crash. Dedup (last write wins) happens at read
time; the file itself stays append-only.
"""

from __future__ import annotations

import os
import threading
import time
import json

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .corpus import _feedback_to_dict  # shared wire format
from .pipeline import SqgModels, generate_questions
from .records import FeedbackTriple, JobPosting, ScreeningQuestion, Template, dedup_feedback


class FeedbackStore:
    """Append-only feedback log with a single serialized writer."""

    def __init__(self, path):
        self.path = str(path)
        self._lock = threading.Lock()
        self._count = 0
        if os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                self._count = sum(1 for line in fh if line.strip())

    def append(self, triple: FeedbackTriple) -> int:
        """Durably append one triple; returns its offset (line index)."""
        line = json.dumps(_feedback_to_dict(triple)) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            offset = self._count
            self._count += 1
        return offset

    def load(self) -> list[FeedbackTriple]:
        if not os.path.exists(self.path):
            return []
        from .corpus import load_dataset

        return load_dataset(self.path, "feedback")

    def deduped(self) -> list[FeedbackTriple]:
        return dedup_feedback(self.load())


class JobIn(BaseModel):
    id: str
    title: str = ""
    body: str = ""
    job_features: dict[str, str] = {}


class FeedbackIn(BaseModel):
    job_id: str
    template: str
    parameter: str | None = None
    label: str
    timestamp: float | None = None


def create_app(models: SqgModels, jobs: list[JobPosting], store: FeedbackStore) -> FastAPI:
    app = FastAPI(title="screening-question suggestions")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    jobs_by_id = {j.id: j for j in jobs}
    job_order = [j.id for j in jobs]
    suggestion_cache: dict[str, list] = {}

    def suggestions_for(job: JobPosting):
        if job.id not in suggestion_cache:
            suggestion_cache[job.id] = [
                {
                    "template": rq.question.template.name,
                    "parameter": rq.question.parameter,
                    "parameter_name": (
                        models.taxonomy.by_id[rq.question.parameter].name
                        if rq.question.parameter in models.taxonomy.by_id
                        else rq.question.parameter
                    ),
                    "score": rq.score,
                }
                for rq in generate_questions(job, models)
            ]
        return suggestion_cache[job.id]

    def decisions() -> dict[tuple, str]:
        return {t.key(): t.label for t in store.deduped()}

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/suggest")
    def suggest(job_in: JobIn):
        job = JobPosting(job_in.id, job_in.title, job_in.body, dict(job_in.job_features))
        ranked = generate_questions(job, models)
        return {
            "job_id": job.id,
            "questions": [
                {
                    "template": rq.question.template.name,
                    "parameter": rq.question.parameter,
                    "score": rq.score,
                }
                for rq in ranked
            ],
        }

    @app.post("/feedback")
    def feedback(fb: FeedbackIn):
        if fb.job_id not in jobs_by_id:
            raise HTTPException(status_code=400, detail=f"unknown job id {fb.job_id!r}")
        try:
            template = Template.from_name(fb.template)
            triple = FeedbackTriple(
                job_id=fb.job_id,
                template=template,
                parameter=fb.parameter,
                label=fb.label,
                timestamp=fb.timestamp if fb.timestamp is not None else time.time(),
            )
            # Also validates template/parameter compatibility.
            ScreeningQuestion(template, fb.parameter)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        offset = store.append(triple)
        return {"offset": offset}

    @app.get("/jobs/pending")
    def pending_jobs():
        decided = decisions()
        out = []
        for job_id in reversed(job_order):  # newest first
            job = jobs_by_id[job_id]
            suggs = suggestions_for(job)
            undecided = sum(
                1
                for s in suggs
                if (job_id, Template.from_name(s["template"]), s["parameter"]) not in decided
            )
            if undecided > 0:
                out.append(
                    {
                        "job_id": job_id,
                        "title": job.title,
                        "suggestions": len(suggs),
                        "undecided": undecided,
                    }
                )
        return out

    @app.get("/jobs/{job_id}/suggestions")
    def job_suggestions(job_id: str):
        job = jobs_by_id.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job id {job_id!r}")
        decided = decisions()
        suggs = []
        for s in suggestions_for(job):
            key = (job_id, Template.from_name(s["template"]), s["parameter"])
            suggs.append({**s, "decision": decided.get(key, "undecided")})
        return {
            "job_id": job_id,
            "title": job.title,
            "body": job.body,
            "suggestions": suggs,
        }

    return app
