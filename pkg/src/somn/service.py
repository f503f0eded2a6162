"""HTTP scoring service backing the clinician review UI.

Cases are stored on disk under a data directory (the uploaded recording
plus state/prediction documents), so the service restarts cleanly with no
external database. Scoring runs on a bounded worker pool, one job per
case at a time; readers always see a consistent snapshot of the state
document. JSON is the wire encoding; waveforms travel as base64
little-endian float32 to bound payload size.
"""

from __future__ import annotations

import base64
import json
import threading
import uuid
from functools import lru_cache
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import SomnError
from .extract import default_taper_bank
from .hypnogram import Hypnogram
from .pipeline import canonical, case_summary, load_recording_bytes, score_probs
from .recording import epoch_count, epoch_slice
from .spectral import spectrogram_epoch, to_db
from .train import load_model_file

DEFAULT_SIZE_CAP = 256 * 1024 * 1024
SCHEMA_PATH = Path(__file__).with_name("api_schema.json")


class CaseStore:
    """Disk-backed case registry with single-writer scoring jobs."""

    def __init__(self, data_dir: Path, n_workers: int = 2):
        self.root = Path(data_dir)
        self.cases_dir = self.root / "cases"
        self.models_dir = self.root / "models"
        self.cases_dir.mkdir(parents=True, exist_ok=True)
        self.models_dir.mkdir(parents=True, exist_ok=True)
        self.lock = threading.Lock()
        self.states: dict[str, dict] = {}
        self.running: set[str] = set()
        from concurrent.futures import ThreadPoolExecutor

        self.pool = ThreadPoolExecutor(max_workers=n_workers,
                                       thread_name_prefix="somn-score")
        self._load_existing()

    def _load_existing(self):
        for state_file in self.cases_dir.glob("*/state.json"):
            with open(state_file, "r", encoding="utf-8") as f:
                state = json.load(f)
            # A job interrupted by restart is failed, not silently stuck.
            if state.get("state") == "running":
                state["state"] = "failed"
                state["error"] = "service restarted during scoring"
            self.states[state["case_id"]] = state

    def case_dir(self, case_id: str) -> Path:
        return self.cases_dir / case_id

    def _write_state(self, state: dict) -> None:
        path = self.case_dir(state["case_id"]) / "state.json"
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(state, f, sort_keys=True)
        tmp.replace(path)

    def create_case(self, data: bytes, filename: str, sidecar_text: str | None) -> dict:
        rec = load_recording_bytes(data)  # validate before accepting
        rec = canonical(rec)
        n = epoch_count(rec)
        expert = None
        if sidecar_text is not None:
            symbols = [ln.strip() for ln in sidecar_text.splitlines() if ln.strip()]
            expert = Hypnogram.from_symbols(symbols)
            if len(expert) != n:
                raise SomnError(
                    f"sidecar has {len(expert)} lines but recording has {n} epochs")
        case_id = uuid.uuid4().hex[:12]
        cdir = self.case_dir(case_id)
        cdir.mkdir(parents=True)
        suffix = ".somn" if data[:4] == b"SOMN" else ".edf"
        with open(cdir / f"recording{suffix}", "wb") as f:
            f.write(data)
        if expert is not None:
            with open(cdir / "expert.hypno", "w", encoding="utf-8") as f:
                f.write("\n".join(expert.symbols()) + "\n")
        state = {
            "case_id": case_id, "filename": filename, "state": "pending",
            "epoch_count": n, "epochs_done": 0, "model": None, "error": None,
            "has_expert": expert is not None,
        }
        with self.lock:
            self.states[case_id] = state
            self._write_state(state)
        return state

    def recording_path(self, case_id: str) -> Path:
        cdir = self.case_dir(case_id)
        for suffix in (".somn", ".edf"):
            p = cdir / f"recording{suffix}"
            if p.exists():
                return p
        raise SomnError(f"case {case_id}: recording file missing")

    def expert_hypnogram(self, case_id: str) -> Hypnogram | None:
        p = self.case_dir(case_id) / "expert.hypno"
        if not p.exists():
            return None
        from .hypnogram import read_sidecar

        return read_sidecar(p)

    def list_models(self) -> list[dict]:
        out = []
        for p in sorted(self.models_dir.glob("*.somd")):
            try:
                tm = load_model_file(p)
                out.append({
                    "name": p.stem,
                    "family": tm.spec.family,
                    "representation": tm.spec.representation,
                    "lookback": tm.spec.lookback,
                    "val_metrics": {k: tm.val_metrics.get(k)
                                    for k in ("loss", "accuracy", "kappa")},
                })
            except SomnError:
                out.append({"name": p.stem, "error": "unreadable model store"})
        return out

    def start_scoring(self, case_id: str, model_name: str) -> None:
        model_path = self.models_dir / f"{model_name}.somd"
        with self.lock:
            state = self.states[case_id]
            if case_id in self.running:
                raise ScoringConflict(case_id)
            self.running.add(case_id)
            state.update(state="running", model=model_name, epochs_done=0, error=None)
            self._write_state(state)
        self.pool.submit(self._score_job, case_id, model_path)

    def _score_job(self, case_id: str, model_path: Path) -> None:
        try:
            tm = load_model_file(model_path)
            rec = canonical(load_recording_bytes(self.recording_path(case_id).read_bytes()))

            def progress(done: int) -> None:
                with self.lock:
                    self.states[case_id]["epochs_done"] = done
                    self._write_state(self.states[case_id])

            probs = score_probs(tm, rec, progress=progress)
            doc = case_summary(probs, self.expert_hypnogram(case_id))
            with open(self.case_dir(case_id) / "predictions.json", "w",
                      encoding="utf-8") as f:
                json.dump(doc, f, sort_keys=True)
            with self.lock:
                self.states[case_id].update(state="done",
                                            epochs_done=len(doc["stages"]))
                self._write_state(self.states[case_id])
        except Exception as e:
            with self.lock:
                self.states[case_id].update(state="failed",
                                            error=f"{type(e).__name__}: {e}")
                self._write_state(self.states[case_id])
        finally:
            with self.lock:
                self.running.discard(case_id)

    def case_document(self, case_id: str) -> dict:
        with self.lock:
            doc = dict(self.states[case_id])
        if doc["state"] == "done":
            with open(self.case_dir(case_id) / "predictions.json", "r",
                      encoding="utf-8") as f:
                doc["result"] = json.load(f)
        return doc


class ScoringConflict(Exception):
    def __init__(self, case_id):
        super().__init__(f"case {case_id} is already being scored")


@lru_cache(maxsize=4)
def _cached_recording(path_str: str, mtime: float):
    from .pipeline import load_recording_file

    return canonical(load_recording_file(path_str))


def create_app(data_dir, ui_dir=None, n_workers: int = 2,
               size_cap: int = DEFAULT_SIZE_CAP) -> FastAPI:
    app = FastAPI(title="somn scoring service", version="1")
    store = CaseStore(Path(data_dir), n_workers=n_workers)
    app.state.store = store
    bank = default_taper_bank()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/schema")
    def schema():
        with open(SCHEMA_PATH, "r", encoding="utf-8") as f:
            return json.load(f)

    @app.get("/models")
    def models():
        return {"models": store.list_models()}

    @app.post("/cases", status_code=201)
    async def create_case(request: Request, file: UploadFile = File(...),
                          sidecar: UploadFile | None = File(None)):
        data = await file.read()
        if len(data) > size_cap:
            return JSONResponse(status_code=413, content={
                "detail": f"upload of {len(data)} bytes exceeds cap {size_cap}"})
        sidecar_text = (await sidecar.read()).decode("utf-8") if sidecar else None
        try:
            state = store.create_case(data, file.filename or "upload", sidecar_text)
        except SomnError as e:
            return JSONResponse(status_code=422, content={"detail": str(e)})
        return {"case_id": state["case_id"], "state": state["state"],
                "epoch_count": state["epoch_count"]}

    @app.get("/cases")
    def list_cases():
        with store.lock:
            return {"cases": [dict(s) for s in store.states.values()]}

    @app.get("/cases/{case_id}")
    def get_case(case_id: str):
        if case_id not in store.states:
            return JSONResponse(status_code=404, content={"detail": "unknown case"})
        return store.case_document(case_id)

    @app.post("/cases/{case_id}/score", status_code=202)
    def score_case(case_id: str, body: dict):
        if case_id not in store.states:
            return JSONResponse(status_code=404, content={"detail": "unknown case"})
        model_name = body.get("model")
        if not model_name or not (store.models_dir / f"{model_name}.somd").exists():
            return JSONResponse(status_code=404,
                                content={"detail": f"unknown model {model_name!r}"})
        try:
            store.start_scoring(case_id, model_name)
        except ScoringConflict as e:
            return JSONResponse(status_code=409, content={"detail": str(e)})
        return {"case_id": case_id, "state": "running", "model": model_name}

    @app.get("/cases/{case_id}/epochs/{t}")
    def epoch_detail(case_id: str, t: int):
        if case_id not in store.states:
            return JSONResponse(status_code=404, content={"detail": "unknown case"})
        path = store.recording_path(case_id)
        rec = _cached_recording(str(path), path.stat().st_mtime)
        n = epoch_count(rec)
        if not 0 <= t < n:
            return JSONResponse(status_code=404, content={
                "detail": f"epoch {t} out of range [0, {n})"})
        epoch = epoch_slice(rec, t)  # (6000, 6)
        spectra = spectrogram_epoch(epoch, bank)
        grid_db = to_db(spectra.mean)
        doc = {
            "case_id": case_id, "epoch": t,
            "channels": rec.channel_labels(),
            "sample_rate_hz": rec.sample_rate_hz,
            "waveform_b64": [base64.b64encode(
                np.ascontiguousarray(epoch[:, c], dtype="<f4").tobytes()).decode("ascii")
                for c in range(epoch.shape[1])],
            "spectrogram_db": [[float(v) for v in row] for row in grid_db],
            "stage_expert": None, "stage_pred": None, "probs": None,
        }
        expert = store.expert_hypnogram(case_id)
        if expert is not None and t < len(expert):
            doc["stage_expert"] = expert.symbols()[t]
        state = store.states[case_id]
        if state["state"] == "done":
            with open(store.case_dir(case_id) / "predictions.json", "r",
                      encoding="utf-8") as f:
                result = json.load(f)
            doc["stage_pred"] = result["stages"][t]
            doc["probs"] = result["probabilities"][t]
        return doc

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
