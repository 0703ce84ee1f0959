"""Read-only HTTP/JSON API over precomputed run artifacts, plus static UI assets.

No inference happens here: candidates for (window, n) are computed from the
stored per-line scores with the same selection routine the offline pipeline
uses, so API responses are byte-equivalent to offline results. All state is
immutable after startup, so concurrent requests need no locking.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .artifacts import EVAL_REPORT_FILE, MANIFEST_FILE, SCORES_DIR, WINDOWS_DIR, read_json
from .errors import DataError
from .ranking import select_top_n
from .scorer import ScoredLine

logger = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class ArtifactStore:
    """Window docs, per-scorer scores, report and manifest loaded once."""

    def __init__(self, out_dir: str | Path):
        out = Path(out_dir)
        windows_dir = out / WINDOWS_DIR
        if not windows_dir.is_dir():
            raise DataError(f"no window artifacts under {out}; run score first")
        self.windows: dict[int, dict] = {}
        for path in sorted(windows_dir.glob("window_*.json")):
            doc = read_json(path)
            self.windows[int(doc["window_id"])] = doc
        self.scores: dict[str, dict[int, list[ScoredLine]]] = {}
        scores_root = out / SCORES_DIR
        if scores_root.is_dir():
            for scorer_dir in sorted(p for p in scores_root.iterdir() if p.is_dir()):
                per_window = {}
                for path in sorted(scorer_dir.glob("window_*.json")):
                    doc = read_json(path)
                    per_window[int(doc["window_id"])] = [
                        ScoredLine(line_id=i, score=v) for i, v in doc["scores"]
                    ]
                self.scores[scorer_dir.name] = per_window
        self.report = read_json(out / EVAL_REPORT_FILE) if (out / EVAL_REPORT_FILE).is_file() else None
        self.manifest = read_json(out / MANIFEST_FILE) if (out / MANIFEST_FILE).is_file() else None

    @property
    def scorers(self) -> list[str]:
        return sorted(self.scores)

    def window(self, window_id: int) -> dict:
        if window_id not in self.windows:
            raise ApiError(404, f"unknown window {window_id}")
        return self.windows[window_id]

    def list_windows(self) -> list[dict]:
        return [
            {
                "id": wid,
                "failure_ts": doc["failure_ts"],
                "size": doc["size"],
                "has_truth": doc["has_truth"],
            }
            for wid, doc in sorted(self.windows.items())
        ]

    def candidates(self, window_id: int, n: int, scorer_name: str | None) -> dict:
        doc = self.window(window_id)
        if scorer_name is None:
            if not self.scorers:
                raise ApiError(409, "no scores available")
            scorer_name = self.scorers[0]
        per_window = self.scores.get(scorer_name)
        if per_window is None or window_id not in per_window:
            raise ApiError(409, f"no scores for scorer {scorer_name!r} on window {window_id}")
        scored = per_window[window_id]
        lines = {line["id"]: line for line in doc["lines"]}
        position = {line["id"]: pos for pos, line in enumerate(doc["lines"])}
        timestamps = {i: lines[i]["ts"] for i in lines}
        cands = select_top_n(scored, n, timestamps, window_id=window_id)
        truth = set(doc["truth"]) if doc["has_truth"] else None
        items = []
        for cand in cands.candidates:
            line = lines[cand.line_id]
            item = {
                "line_id": cand.line_id,
                "pos": position[cand.line_id],
                "ts": cand.timestamp,
                "service": line["service"],
                "msg": line["msg"],
                "severity": line.get("severity"),
                "score": cand.score,
            }
            if truth is not None:
                item["in_truth"] = cand.line_id in truth
            items.append(item)
        return {
            "window_id": window_id,
            "scorer": scorer_name,
            "n": n,
            "count": len(items),
            "candidates": items,
        }

    def lines(self, window_id: int, start: int, end: int) -> dict:
        """Window lines by position, inclusive range, clamped to bounds."""
        doc = self.window(window_id)
        size = doc["size"]
        start = max(0, start)
        end = min(size - 1, end)
        rows = []
        if size and start <= end:
            truth = set(doc["truth"]) if doc["has_truth"] else None
            for pos in range(start, end + 1):
                line = doc["lines"][pos]
                row = dict(line, pos=pos)
                if truth is not None:
                    row["in_truth"] = line["id"] in truth
                rows.append(row)
        return {"window_id": window_id, "from": start, "to": end, "lines": rows}


def _int_param(params: dict, name: str, default: int | None = None) -> int | None:
    values = params.get(name)
    if not values:
        return default
    try:
        return int(values[0])
    except ValueError:
        raise ApiError(400, f"parameter {name!r} must be an integer") from None


class _Handler(BaseHTTPRequestHandler):
    store: ArtifactStore
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):  # route through logging, not stderr
        logger.debug("%s " + fmt, self.address_string(), *args)

    def _send_json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_file(self, path: Path) -> None:
        body = path.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", _CONTENT_TYPES.get(path.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802 (http.server naming)
        try:
            self._route()
        except ApiError as exc:
            self._send_json({"error": str(exc)}, status=exc.status)
        except BrokenPipeError:
            pass
        except Exception:
            logger.exception("request failed: %s", self.path)
            self._send_json({"error": "internal error"}, status=500)

    def _route(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        params = parse_qs(url.query)

        if parts[:1] == ["api"]:
            if parts == ["api", "windows"]:
                return self._send_json({"windows": self.store.list_windows(), "scorers": self.store.scorers})
            if len(parts) == 4 and parts[1] == "windows" and parts[3] == "candidates":
                wid = self._window_id(parts[2])
                n = _int_param(params, "n", 10)
                if n is None or n < 1:
                    raise ApiError(400, "n must be a positive integer")
                scorer_name = params.get("scorer", [None])[0]
                return self._send_json(self.store.candidates(wid, n, scorer_name))
            if len(parts) == 4 and parts[1] == "windows" and parts[3] == "lines":
                wid = self._window_id(parts[2])
                start = _int_param(params, "from", 0)
                end = _int_param(params, "to", 10**9)
                return self._send_json(self.store.lines(wid, start, end))
            if parts == ["api", "report"]:
                if self.store.report is None:
                    raise ApiError(404, "no eval report; run eval first")
                return self._send_json(self.store.report)
            if parts == ["api", "manifest"]:
                if self.store.manifest is None:
                    raise ApiError(404, "no manifest")
                return self._send_json(self.store.manifest)
            raise ApiError(404, f"no such endpoint: {url.path}")

        # static assets
        if self.ui_dir is None:
            raise ApiError(404, "no UI assets configured; use the /api endpoints")
        rel = url.path.lstrip("/") or "index.html"
        root = self.ui_dir.resolve()
        target = (self.ui_dir / rel).resolve()
        if root not in target.parents or not target.is_file():
            raise ApiError(404, f"no such file: {url.path}")
        self._send_file(target)

    @staticmethod
    def _window_id(raw: str) -> int:
        try:
            return int(raw)
        except ValueError:
            raise ApiError(404, f"unknown window {raw!r}") from None


def make_server(
    out_dir: str | Path,
    port: int = 8765,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    store = ArtifactStore(out_dir)
    handler = type("Handler", (_Handler,), {
        "store": store,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(server: ThreadingHTTPServer) -> None:
    host, port = server.server_address[:2]
    logger.info("serving on http://%s:%d", host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_background(server: ThreadingHTTPServer) -> threading.Thread:
    """Run the server on a daemon thread (used by tests and demos)."""
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
