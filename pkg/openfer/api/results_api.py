from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pathlib import Path
from openfer.utils.paths import RUNS_D
from openfer.evaluation import PLOT_FILE, REPORT_FILE, SCORES_FILE
from openfer.runners.protocol import REPORT_FILE as PROTOCOL_REPORT
import json


def create_app(runs_dir: Path = RUNS_D) -> FastAPI:
    app = FastAPI(title="OpenFER Results API")
    runs_dir = Path(runs_dir)

    def run_path(run: str) -> Path:
        rd = runs_dir / run
        if "/" in run or run.startswith(".") or not rd.is_dir():
            raise HTTPException(404, "Run not found")
        return rd

    def split_path(run: str, split: str) -> Path:
        sd = run_path(run) / split
        if "/" in split or split.startswith(".") or not sd.is_dir():
            raise HTTPException(404, "Split not found")
        return sd

    @app.get("/runs")
    def runs():
        if not runs_dir.exists():
            return []
        return sorted(p.name for p in runs_dir.iterdir() if p.is_dir())

    @app.get("/runs/{run}/report")
    def report(run: str):
        rd = run_path(run)
        for name in (PROTOCOL_REPORT, REPORT_FILE):
            if (rd / name).exists():
                return JSONResponse(json.loads((rd / name).read_text()))
        raise HTTPException(404, "Report not found")

    @app.get("/runs/{run}/scores/{split}")
    def scores(run: str, split: str):
        fp = split_path(run, split) / SCORES_FILE
        if not fp.exists():
            raise HTTPException(404, "Scores not found")
        return JSONResponse(json.loads(fp.read_text()))

    @app.get("/runs/{run}/plots/{split}")
    def plot(run: str, split: str):
        fp = split_path(run, split) / PLOT_FILE
        if not fp.exists():
            raise HTTPException(404, "Plot not found")
        return FileResponse(fp, media_type="image/png")

    return app


app = create_app()
