"""HTTP/JSON facade over :class:`~adaptivity.engine.Engine`.

Request bodies are parsed by hand rather than through pydantic models so
unknown fields and typed domain errors map onto the documented status codes.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from adaptivity._docs import check_keys, parse_json
from adaptivity.config import AdaptationConfig
from adaptivity.engine import Engine
from adaptivity.errors import AdaptivityError, InvalidAgeLevel, MalformedDocument
from adaptivity.planner import SessionResult

STATUS = {
    "MalformedDocument": 400,
    "DuplicateFeatureId": 400,
    "UnknownFeatureInEdge": 400,
    "CycleDetected": 400,
    "UnknownFeatureReference": 400,
    "DuplicateEntryId": 400,
    "InvalidConfig": 400,
    "UnknownGraph": 404,
    "UnknownStudent": 404,
    "DuplicateModel": 409,
    "NoPlayableFeature": 409,
    "NoContentForFeature": 409,
    "FeatureNotOpen": 409,
    "InvalidAgeLevel": 422,
    "EmptySession": 422,
    "UnknownFeature": 422,
}

ENV_PORT = "ADAPTIVITY_PORT"
ENV_DATA_DIR = "ADAPTIVITY_DATA_DIR"


def error_response(exc: AdaptivityError) -> JSONResponse:
    body = {"error": exc.code, "detail": str(exc)}
    if hasattr(exc, "cycle"):
        body["cycle"] = exc.cycle
    return JSONResponse(body, status_code=STATUS.get(exc.code, 400))


async def _body(request: Request):
    return parse_json(await request.body())


def create_app(engine: Engine | None = None) -> FastAPI:
    engine = engine or Engine()
    app = FastAPI(title="adaptivity")
    app.state.engine = engine

    @app.exception_handler(AdaptivityError)
    async def _domain_error(request: Request, exc: AdaptivityError):
        return error_response(exc)

    @app.post("/models", status_code=201)
    async def register_model(request: Request):
        doc = check_keys(await _body(request), {"graph", "lexicon"}, where="body")
        graph_id, lexicon_id = engine.register_model(doc["graph"], doc["lexicon"])
        return {"graph_id": graph_id, "lexicon_id": lexicon_id}

    @app.post("/students", status_code=201)
    async def create_student(request: Request):
        doc = check_keys(await _body(request), {"age_level", "graph_id"}, where="body")
        if not isinstance(doc["graph_id"], str):
            raise MalformedDocument("body.graph_id: expected a string")
        age = doc["age_level"]
        if isinstance(age, bool) or not isinstance(age, int) or age < 0:
            raise InvalidAgeLevel(f"age_level must be a non-negative integer, got {age!r}")
        profile = engine.create_student(doc["graph_id"], age)
        return {"student_id": profile.student_id}

    @app.get("/students/{student_id}")
    def get_student(student_id: str):
        return engine.profile(student_id).to_doc()

    @app.get("/students/{student_id}/next-session")
    def next_session(student_id: str):
        return engine.next_session(student_id).to_doc()

    @app.post("/students/{student_id}/results")
    async def submit(student_id: str, request: Request):
        result = SessionResult.from_doc(await _body(request))
        return engine.submit(student_id, result).to_doc()

    @app.get("/students/{student_id}/events")
    def events(student_id: str, since: int = 0):
        return [e.to_doc() for e in engine.events(student_id, since)]

    return app


def load_service_config(path: str | os.PathLike | None) -> dict:
    """Read the service config file and apply environment overrides.

    File keys: ``host``, ``port``, ``data_dir``, ``fsync`` and ``adaptation``
    (an adaptation config document). ``ADAPTIVITY_PORT`` and
    ``ADAPTIVITY_DATA_DIR`` override the file.
    """
    doc = {}
    if path is not None:
        doc = check_keys(parse_json(Path(path).read_bytes()), set(),
                         {"host", "port", "data_dir", "fsync", "adaptation"}, "service config")
    settings = {
        "host": doc.get("host", "127.0.0.1"),
        "port": int(doc.get("port", 8000)),
        "data_dir": doc.get("data_dir"),
        "fsync": bool(doc.get("fsync", False)),
        "adaptation": AdaptationConfig.from_doc(doc.get("adaptation")),
    }
    if os.environ.get(ENV_PORT):
        settings["port"] = int(os.environ[ENV_PORT])
    if os.environ.get(ENV_DATA_DIR):
        settings["data_dir"] = os.environ[ENV_DATA_DIR]
    return settings


def serve(config_path=None) -> None:
    import uvicorn

    settings = load_service_config(config_path)
    engine = Engine(settings["adaptation"], data_dir=settings["data_dir"], fsync=settings["fsync"])
    uvicorn.run(create_app(engine), host=settings["host"], port=settings["port"])
