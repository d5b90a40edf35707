"""Loopback reference implementation of the sampling wire protocol.

Serves POST /v1/sample: solves the submitted model exhaustively (up to 20
variables) and returns every minimising assignment, with the read count
split as evenly as possible across them. Ships as the test double for the
remote-sampler client; params flags make it misbehave on request:

* {"malformed": true}        -- reply with invalid JSON
* {"corrupt_energies": true} -- overstate every energy by 1
* {"reject": "<msg>"}        -- reply with an error document and Retry-After
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .qubo import QuboModel
from .samplers import solve_exhaustive

__all__ = ["MAX_VARS", "ReferenceServer"]

MAX_VARS = 20


def _model_from_wire(doc: dict) -> QuboModel:
    n = doc["n"]
    linear: dict[int, int] = {}
    quadratic: dict[tuple[int, int], int] = {}
    for i, j, c in doc["terms"]:
        if i == j:
            linear[i] = linear.get(i, 0) + c
        else:
            key = (i, j) if i < j else (j, i)
            quadratic[key] = quadratic.get(key, 0) + c
    return QuboModel(n, linear, quadratic, doc.get("offset", 0),
                     {i: "x" for i in range(n)})


def _solve_payload(doc: dict) -> dict:
    model = _model_from_wire(doc)
    num_reads = int(doc.get("num_reads", 1))
    emin, assignments = solve_exhaustive(model)
    base, rem = divmod(num_reads, len(assignments))
    samples, energies, occurrences = [], [], []
    for pos, bits in enumerate(assignments):
        occ = base + (1 if pos < rem else 0)
        if occ == 0:
            continue
        samples.append(list(bits))
        energies.append(emin)
        occurrences.append(occ)
    return {"samples": samples, "energies": energies, "occurrences": occurrences}


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # silence request logging in tests
        pass

    def do_POST(self):
        if self.path != "/v1/sample":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            doc = json.loads(self.rfile.read(length))
        except ValueError:
            self._reply(400, {"samples": [], "energies": [], "occurrences": [],
                              "error": "request is not valid JSON"})
            return
        params = doc.get("params") or {}
        if params.get("malformed"):
            body = b"this is not json {"
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        if params.get("reject"):
            self._reply(503, {"samples": [], "energies": [], "occurrences": [],
                              "error": str(params["reject"])},
                        headers={"Retry-After": "1"})
            return
        if doc.get("n", 0) > MAX_VARS:
            self._reply(400, {"samples": [], "energies": [], "occurrences": [],
                              "error": f"model exceeds {MAX_VARS} variables"})
            return
        try:
            out = _solve_payload(doc)
        except Exception as exc:  # malformed terms and friends
            self._reply(400, {"samples": [], "energies": [], "occurrences": [],
                              "error": f"bad request: {exc}"})
            return
        if params.get("corrupt_energies"):
            out["energies"] = [e + 1 for e in out["energies"]]
        self._reply(200, out)

    def _reply(self, status: int, doc: dict, headers: dict | None = None):
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)


class ReferenceServer:
    """In-process loopback server; use as a context manager."""

    def __init__(self, port: int = 0):
        self._server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "ReferenceServer":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
        return False
