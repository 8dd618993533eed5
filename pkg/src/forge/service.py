"""HTTP job API for the studio UI.

Jobs execute synchronously inside requests (the scripted provider makes this
instant; remote providers block the request for their duration).  The event
stream replays the job's append-only log and closes once the job is parked
in a waiting or terminal state; clients poll or reconnect for later phases.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .errors import ForgeError
from .gateway import ProviderGateway
from .pipeline import EngineConfig, InvalidTransition, JobRunner
from .planner import PACKAGE_NAME_RE, plan_to_dict


def snapshot(runner: JobRunner) -> dict:
    job = runner.job
    artifacts = {}
    if job.state == "done":
        artifacts = {
            "package_zip": f"/api/jobs/{job.id}/package.zip",
            "documentation": f"/api/jobs/{job.id}/documentation.md",
            "report": f"/api/jobs/{job.id}/report.json",
        }
    return {
        "id": job.id,
        "state": job.state,
        "error": job.error,
        "plan": plan_to_dict(job.plan) if job.plan is not None else None,
        "proposed_files": list(job.proposed_files),
        "used_fallback": job.used_fallback,
        "events": [
            {"timestamp": e.timestamp, "phase": e.phase, "message": e.message}
            for e in job.events
        ],
        "artifacts": artifacts,
    }


def create_app(
    config: EngineConfig,
    gateway: ProviderGateway | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="forge studio api")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    jobs: dict[str, JobRunner] = {}
    lock = threading.Lock()

    def get_runner(job_id: str) -> JobRunner:
        runner = jobs.get(job_id)
        if runner is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return runner

    @app.post("/api/jobs", status_code=201)
    def create_job(payload: dict):
        name = payload.get("name", "")
        description = payload.get("description", "")
        features = payload.get("features", [])
        if not isinstance(name, str) or not PACKAGE_NAME_RE.match(name):
            raise HTTPException(status_code=400, detail="name must match [a-z][a-z0-9_]*")
        if not isinstance(description, str) or not description.strip():
            raise HTTPException(status_code=400, detail="description must be non-empty")
        if not isinstance(features, list) or any(
            not isinstance(f, str) or not f.strip() for f in features
        ):
            raise HTTPException(status_code=400, detail="features must be non-empty strings")

        runner = JobRunner(config, gateway=gateway)
        with lock:
            jobs[runner.job.id] = runner
        try:
            runner.start(name, description, features)
        except ForgeError:
            pass  # job is marked failed; the snapshot carries the cause
        return {"id": runner.job.id, "state": runner.job.state}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        return snapshot(get_runner(job_id))

    @app.post("/api/jobs/{job_id}/refine")
    def refine_job(job_id: str, payload: dict):
        runner = get_runner(job_id)
        feedback = payload.get("feedback", "")
        if not isinstance(feedback, str) or not feedback.strip():
            raise HTTPException(status_code=400, detail="feedback must be non-empty")
        try:
            runner.refine(feedback)
        except InvalidTransition as err:
            raise HTTPException(status_code=409, detail=str(err))
        except ForgeError:
            pass
        return snapshot(runner)

    @app.post("/api/jobs/{job_id}/confirm")
    def confirm_job(job_id: str):
        runner = get_runner(job_id)
        state = runner.job.state
        try:
            if state == "awaiting_refinement":
                # approve the refined plan: generate and propose the file list
                runner.propose()
            elif state == "awaiting_confirmation":
                runner.confirm()
            else:
                raise InvalidTransition(f"cannot confirm a job in state {state!r}")
        except InvalidTransition as err:
            raise HTTPException(status_code=409, detail=str(err))
        except ForgeError:
            pass
        return snapshot(runner)

    @app.get("/api/jobs/{job_id}/events")
    def job_events(job_id: str, request: Request):
        runner = get_runner(job_id)

        def stream():
            for index, event in enumerate(list(runner.job.events)):
                payload = json.dumps(
                    {"timestamp": event.timestamp, "phase": event.phase,
                     "message": event.message}
                )
                yield f"id: {index}\nevent: phase\ndata: {payload}\n\n"
            yield "event: end\ndata: {}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    def artifact(job_id: str, filename: str, media_type: str):
        runner = get_runner(job_id)
        path = runner.job.workspace / filename
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"{filename} not available")
        return FileResponse(path, media_type=media_type)

    @app.get("/api/jobs/{job_id}/package.zip")
    def job_zip(job_id: str):
        return artifact(job_id, "package.zip", "application/zip")

    @app.get("/api/jobs/{job_id}/documentation.md")
    def job_documentation(job_id: str):
        return artifact(job_id, "DOCUMENTATION.md", "text/markdown")

    @app.get("/api/jobs/{job_id}/report.json")
    def job_report(job_id: str):
        return artifact(job_id, "report.json", "application/json")

    @app.exception_handler(ForgeError)
    def forge_error_handler(request: Request, exc: ForgeError):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="studio")

    return app


def serve(config: EngineConfig, port: int = 8321, gateway: ProviderGateway | None = None,
          static_dir: str | Path | None = None) -> None:
    import uvicorn

    app = create_app(config, gateway=gateway, static_dir=static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")
