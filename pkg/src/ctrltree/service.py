"""HTTP+JSON facade over ingest, builder, bench, export and simulate.

A thin adapter: every number a response carries is produced by the
underlying module operations on the persisted inputs.  Uploaded artifacts
live as flat files under the data directory keyed by content hash, and
experiment ids derive from the input hash plus the config fingerprint, so
ids are stable across restarts and repeated submissions are served from
disk.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import export as export_mod
from .builder import BuildConfig, BuildSession, build_tree, retrain_subtree
from .errors import CtrlTreeError
from .ingest import (
    parse_controller_csv,
    parse_domain_knowledge,
    parse_metadata_document,
    parse_strategy_json,
)
from .model import Controller, DecisionTree, tree_stats
from .simulate import Simulation, parse_transitions

API = "/api/v1"

#: long builds run on this many background workers; session/simulation
#: operations always run inline
WORKER_POOL_SIZE = 2


def _short_hash(*parts: bytes) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(hashlib.sha256(p).digest())
    return h.hexdigest()[:16]


def _error_response(kind: str, detail: str, status: int) -> JSONResponse:
    return JSONResponse({"error": {"kind": kind, "detail": detail}},
                        status_code=status)


class NotFound(Exception):
    def __init__(self, detail: str):
        self.detail = detail


class _Store:
    """Flat-file persistence plus in-memory interactive state."""

    def __init__(self, data_dir: Path):
        self.root = Path(data_dir)
        (self.root / "controllers").mkdir(parents=True, exist_ok=True)
        (self.root / "experiments").mkdir(parents=True, exist_ok=True)
        self.pool = ThreadPoolExecutor(max_workers=WORKER_POOL_SIZE)
        self.sessions: dict[str, BuildSession] = {}
        self.session_locks: dict[str, threading.Lock] = {}
        self.session_controllers: dict[str, str] = {}
        self.simulations: dict[str, Simulation] = {}
        self.simulation_locks: dict[str, threading.Lock] = {}
        self._controllers: dict[str, Controller] = {}
        self._cache_lock = threading.Lock()

    # -- controllers -----------------------------------------------------

    def save_controller(self, files: dict[str, bytes]) -> str:
        cid = _short_hash(*(k.encode() + b"\0" + v for k, v in sorted(files.items())))
        directory = self.root / "controllers" / cid
        directory.mkdir(parents=True, exist_ok=True)
        for name, payload in files.items():
            (directory / name).write_bytes(payload)
        self.load_controller(cid)  # validate eagerly
        return cid

    def controller_dir(self, cid: str) -> Path:
        directory = self.root / "controllers" / cid
        if not directory.is_dir():
            raise NotFound(f"no controller {cid}")
        return directory

    def load_controller(self, cid: str) -> Controller:
        with self._cache_lock:
            if cid in self._controllers:
                return self._controllers[cid]
        directory = self.controller_dir(cid)
        meta = objective = None
        meta_path = directory / "metadata.json"
        if meta_path.exists():
            doc = parse_metadata_document(meta_path.read_bytes())
            meta, objective = list(doc.variables), doc.objective
        if (directory / "controller.csv").exists():
            controller = parse_controller_csv((directory / "controller.csv").read_bytes(), meta)
        else:
            controller = parse_strategy_json((directory / "strategy.json").read_bytes(), meta)
        if objective is not None:
            controller.objective = objective
        with self._cache_lock:
            self._controllers[cid] = controller
        return controller

    def controller_templates(self, cid: str):
        path = self.controller_dir(cid) / "domain_knowledge.txt"
        if path.exists():
            return tuple(parse_domain_knowledge(path.read_bytes()))
        return ()

    def controller_transitions(self, cid: str, tree: DecisionTree):
        path = self.controller_dir(cid) / "transitions.json"
        if path.exists():
            return parse_transitions(path.read_bytes(), tree)
        return None

    def effective_config(self, cid: str, doc: dict) -> BuildConfig:
        """Config from the request; a controller-level domain-knowledge file
        supplies the templates when the request does not carry its own."""
        config = BuildConfig.from_dict(doc or {})
        if not config.templates:
            templates = self.controller_templates(cid)
            if templates:
                config = replace(config, templates=templates)
        return config

    # -- experiments -------------------------------------------------------

    def experiment_dir(self, eid: str, must_exist: bool = True) -> Path:
        directory = self.root / "experiments" / eid
        if must_exist and not directory.is_dir():
            raise NotFound(f"no experiment {eid}")
        return directory

    def submit_experiment(self, cid: str, config: BuildConfig,
                          retrain_of: tuple[str, int] | None = None) -> str:
        payload = f"{cid}:{config.fingerprint()}"
        if retrain_of:
            payload += f":retrain:{retrain_of[0]}:{retrain_of[1]}"
        eid = _short_hash(payload.encode())
        directory = self.experiment_dir(eid, must_exist=False)
        if directory.is_dir() and (directory / "result.json").exists():
            return eid  # identical request already answered
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "request.json").write_text(json.dumps({
            "controller_id": cid, "config": config.to_dict(),
            "retrain_of": list(retrain_of) if retrain_of else None}))
        self._set_status(eid, "queued")
        self.pool.submit(self._run_experiment, eid, cid, config, retrain_of)
        return eid

    def _set_status(self, eid: str, status: str, error: str | None = None):
        doc = {"status": status}
        if error:
            doc["error"] = error
        (self.experiment_dir(eid, False) / "status.json").write_text(json.dumps(doc))

    def _run_experiment(self, eid: str, cid: str, config: BuildConfig,
                        retrain_of: tuple[str, int] | None):
        directory = self.experiment_dir(eid, False)
        self._set_status(eid, "running")
        try:
            controller = self.load_controller(cid)
            if retrain_of:
                base = self.load_tree(retrain_of[0])
                tree = retrain_subtree(base, retrain_of[1], controller, config)
            else:
                tree = build_tree(controller, config)
            stats = tree_stats(tree)
            (directory / "tree.json").write_text(export_mod.export_json(tree))
            (directory / "result.json").write_text(json.dumps({
                "total_nodes": stats.total_nodes, "inner_nodes": stats.inner_nodes,
                "leaves": stats.leaves, "depth": stats.depth,
                "exact": tree.is_exact,
                "config_fingerprint": config.fingerprint()}))
            self._set_status(eid, "done")
        except Exception as e:  # recorded, never propagated out of the worker
            kind = e.kind if isinstance(e, CtrlTreeError) else type(e).__name__
            self._set_status(eid, "failed", f"{kind}: {e}")

    def experiment_status(self, eid: str) -> dict:
        directory = self.experiment_dir(eid)
        out = {"experiment_id": eid}
        out.update(json.loads((directory / "status.json").read_text()))
        result = directory / "result.json"
        if out["status"] == "done" and result.exists():
            out["stats"] = json.loads(result.read_text())
        request = directory / "request.json"
        if request.exists():
            out["controller_id"] = json.loads(request.read_text())["controller_id"]
        return out

    def load_tree(self, eid: str) -> DecisionTree:
        path = self.experiment_dir(eid) / "tree.json"
        if not path.exists():
            raise NotFound(f"experiment {eid} has no tree (not done)")
        return export_mod.import_json(path.read_text())

    def resolve_tree(self, tree_ref: str) -> tuple[DecisionTree, str | None]:
        """A tree_ref names either a finished experiment or an interactive
        session (whose current snapshot is simulated)."""
        if tree_ref in self.sessions:
            with self.session_locks[tree_ref]:
                tree = self.sessions[tree_ref].tree(allow_open=True)
            return tree, self.session_controllers.get(tree_ref)
        tree = self.load_tree(tree_ref)
        return tree, self.experiment_status(tree_ref).get("controller_id")


def _session_report_doc(report) -> dict:
    doc = asdict(report)
    return doc


def create_app(data_dir: str | Path) -> FastAPI:
    store = _Store(Path(data_dir))
    app = FastAPI(title="ctrltree service", openapi_url=f"{API}/openapi.json")
    app.state.store = store

    @app.exception_handler(CtrlTreeError)
    async def _domain_error(_: Request, exc: CtrlTreeError):
        return _error_response(exc.kind, str(exc), 400)

    @app.exception_handler(NotFound)
    async def _not_found(_: Request, exc: NotFound):
        return _error_response("NotFound", exc.detail, 404)

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError):
        return _error_response("InvalidRequest", str(exc), 400)

    # -- controllers ---------------------------------------------------------

    @app.post(API + "/controllers")
    async def upload_controller(request: Request):
        form = await request.form()
        files: dict[str, bytes] = {}
        names = {"csv": "controller.csv", "strategy-json": "strategy.json",
                 "metadata": "metadata.json", "dk": "domain_knowledge.txt",
                 "transitions": "transitions.json"}
        for field, filename in names.items():
            value = form.get(field)
            if value is None:
                continue
            payload = await value.read() if hasattr(value, "read") \
                else str(value).encode()
            files[filename] = payload
        if ("controller.csv" in files) == ("strategy.json" in files):
            return _error_response(
                "InvalidRequest",
                "upload exactly one of 'csv' or 'strategy-json'", 400)
        cid = store.save_controller(files)
        return {"controller_id": cid}

    @app.get(API + "/controllers/{cid}")
    async def controller_info(cid: str):
        controller = store.load_controller(cid)
        return {
            "controller_id": cid,
            "states": len(controller),
            "permissive": controller.permissive,
            "variables": [{"name": v.name, "kind": v.kind,
                           **({"dictionary": list(v.dictionary)}
                              if v.dictionary else {})}
                          for v in controller.variables],
            "actions": list(controller.label_table),
        }

    # -- experiments -----------------------------------------------------------

    @app.post(API + "/experiments")
    async def submit_experiment(request: Request):
        doc = await request.json()
        cid = doc.get("controller_id", "")
        store.controller_dir(cid)
        config = store.effective_config(cid, doc.get("config", {}))
        return {"experiment_id": store.submit_experiment(cid, config)}

    @app.get(API + "/experiments/{eid}")
    async def experiment_status(eid: str):
        return store.experiment_status(eid)

    @app.get(API + "/experiments/{eid}/tree")
    async def experiment_tree(eid: str):
        path = store.experiment_dir(eid) / "tree.json"
        if not path.exists():
            raise NotFound(f"experiment {eid} has no tree")
        # exactly the bytes the export module produced
        return PlainTextResponse(path.read_text(), media_type="application/json")

    @app.get(API + "/experiments/{eid}/export")
    async def experiment_export(eid: str, format: str = "dot"):
        tree = store.load_tree(eid)
        if format == "dot":
            return PlainTextResponse(export_mod.export_dot(tree))
        if format == "c":
            return PlainTextResponse(export_mod.export_c(tree))
        return _error_response("InvalidRequest", f"unknown format {format!r}", 400)

    @app.post(API + "/trees/{eid}/retrain")
    async def retrain(eid: str, request: Request):
        doc = await request.json()
        status = store.experiment_status(eid)
        cid = status.get("controller_id")
        node_id = int(doc["node_id"])
        store.load_tree(eid)  # 404 early when the tree is not there yet
        config = store.effective_config(cid, doc.get("config", {}))
        new_eid = store.submit_experiment(cid, config, retrain_of=(eid, node_id))
        return {"experiment_id": new_eid}

    # -- interactive sessions ---------------------------------------------------

    def _locked_session(sid: str):
        if sid not in store.sessions:
            raise NotFound(f"no session {sid}")
        return store.sessions[sid], store.session_locks[sid]

    @app.post(API + "/sessions")
    async def open_session(request: Request):
        doc = await request.json()
        cid = doc.get("controller_id", "")
        controller = store.load_controller(cid)
        config = store.effective_config(cid, doc.get("config", {}))
        sid = uuid.uuid4().hex[:12]
        store.sessions[sid] = BuildSession(controller, config)
        store.session_locks[sid] = threading.Lock()
        store.session_controllers[sid] = cid
        return {"session_id": sid}

    @app.get(API + "/sessions/{sid}/node")
    async def session_node(sid: str):
        session, lock = _locked_session(sid)
        with lock:
            report = session.node_stats()
            doc = _session_report_doc(report)
            doc["open_nodes"] = session.open_nodes()
            return doc

    @app.post(API + "/sessions/{sid}/evaluate")
    async def session_evaluate(sid: str, request: Request):
        doc = await request.json()
        session, lock = _locked_session(sid)
        with lock:
            report = session.evaluate_text(doc.get("expr", ""))
            out = _session_report_doc(report)
            if report.impurity == float("inf"):
                out["impurity"] = "inf"
            return out

    @app.post(API + "/sessions/{sid}/split")
    async def session_split(sid: str, request: Request):
        doc = await request.json()
        session, lock = _locked_session(sid)
        with lock:
            if "expr" in doc:
                from .ingest import parse_comparison
                from .model import Algebraic
                from . import expressions as ex
                lhs, cmp, rhs = parse_comparison(doc["expr"])
                pred = Algebraic(lhs, cmp, rhs,
                                 f"{ex.to_text(lhs)} {cmp} {ex.to_text(rhs)}")
            else:
                pred = export_mod._pred_from_doc(doc.get("predicate", {}))
            nid = session.apply_predicate(pred)
            return {"split_node": nid, "cursor": session.cursor,
                    "open_nodes": session.open_nodes()}

    @app.post(API + "/sessions/{sid}/autocomplete")
    async def session_autocomplete(sid: str):
        session, lock = _locked_session(sid)
        with lock:
            session.autocomplete()
            return {"open_nodes": session.open_nodes()}

    @app.post(API + "/sessions/{sid}/goto")
    async def session_goto(sid: str, request: Request):
        doc = await request.json()
        session, lock = _locked_session(sid)
        with lock:
            session.goto(int(doc["node_id"]))
            return {"cursor": session.cursor, "open_nodes": session.open_nodes()}

    @app.get(API + "/sessions/{sid}/tree")
    async def session_tree(sid: str):
        session, lock = _locked_session(sid)
        with lock:
            tree = session.tree(allow_open=True)
            return PlainTextResponse(export_mod.export_json(tree),
                                     media_type="application/json")

    # -- simulations -----------------------------------------------------------

    @app.post(API + "/simulations")
    async def open_simulation(request: Request):
        doc = await request.json()
        tree, cid = store.resolve_tree(doc.get("tree_ref", ""))
        transitions = store.controller_transitions(cid, tree) if cid else None
        sim = Simulation(tree, tuple(doc["initial_state"]), transitions)
        sim_id = uuid.uuid4().hex[:12]
        store.simulations[sim_id] = sim
        store.simulation_locks[sim_id] = threading.Lock()
        return {"sim_id": sim_id,
                "path": sim.current_path().to_dict(),
                "allowed": sorted(sim.allowed())}

    @app.get(API + "/simulations/{sim_id}")
    async def simulation_trace(sim_id: str):
        if sim_id not in store.simulations:
            raise NotFound(f"no simulation {sim_id}")
        with store.simulation_locks[sim_id]:
            return store.simulations[sim_id].trace_dict()

    @app.post(API + "/simulations/{sim_id}/step")
    async def simulation_step(sim_id: str, request: Request):
        doc = await request.json()
        if sim_id not in store.simulations:
            raise NotFound(f"no simulation {sim_id}")
        sim = store.simulations[sim_id]
        with store.simulation_locks[sim_id]:
            next_state = doc.get("next_state")
            path = sim.step(doc["action"],
                            tuple(next_state) if next_state is not None else None)
            return {"path": path.to_dict(),
                    "state": list(sim.state),
                    "allowed": sorted(sim.allowed())}

    ui_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dist.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def serve(port: int = 8642, data_dir: str | Path = "ctrltree-data",
          host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")
