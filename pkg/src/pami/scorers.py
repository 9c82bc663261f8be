"""The black-box model boundary.

Everything the explanation engine learns from a model comes through a single
``score(image) -> ScoreVector`` contract. Builtin synthetic scorers double as
ground-truth oracles for testing; external scorers run as separate processes
behind a line-delimited JSON protocol (stdio pipes or HTTP).

Wire protocol, one JSON object per line / per POST body:

    request:  {"id": <u64>, "png": "<base64 of 8-bit PNG>", "class_hint": <int, optional>}
              {"id": <u64>, "text": "<masked sentence>"}        (sequence inputs)
    response: {"id": <u64>, "scores": [<float>...], "kind": "softmax"|"independent"}
    error:    {"id": <u64>, "error": "<message>"}

External scorers must be deterministic: identical requests get byte-identical
score arrays. The engine relies on this to cache and to parallelize freely.
"""

from __future__ import annotations

import base64
import io
import json
import os
import select
import shlex
import subprocess
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage

from .types import Image, ScoreVector

__all__ = [
    "ScoringError",
    "ScorerSpec",
    "Scorer",
    "ConstantScorer",
    "BlobScorer",
    "LinearScorer",
    "KeywordScorer",
    "StdioScorer",
    "HttpScorer",
    "build_scorer",
    "parse_scorer_arg",
    "encode_image_png",
    "decode_image_png",
]

SCORER_KINDS = (
    "builtin-constant",
    "builtin-blob",
    "builtin-linear",
    "external-stdio",
    "external-http",
)


class ScoringError(RuntimeError):
    """A scorer failed: timeout, malformed reply, or dead process.

    Carries the request id and the raw payload that triggered the failure,
    plus the batch index / window center when raised mid-pipeline.
    """

    def __init__(self, message, request_id=None, payload=None, index=None):
        super().__init__(message)
        self.request_id = request_id
        self.payload = payload
        self.index = index
        self.context: dict = {}


@dataclass(frozen=True)
class ScorerSpec:
    """Declarative scorer configuration, e.g. parsed from the command line."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind.startswith("external") and not self.params.get("endpoint"):
            raise ValueError(f"{self.kind} requires a non-empty endpoint")
        if self.kind == "builtin-blob":
            color = self.params.get("target_color", ())
            if not color or any(not 0.0 <= c <= 1.0 for c in color):
                raise ValueError("blob target color components must lie in [0, 1]")


def encode_image_png(img: Image) -> str:
    """Base64 PNG of the 8-bit quantized image (the transport format)."""
    raw = img.to_8bit()
    mode = "L" if img.channels == 1 else "RGB"
    pil = PILImage.fromarray(raw[:, :, 0] if mode == "L" else raw, mode=mode)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image_png(payload: str) -> Image:
    """Inverse of :func:`encode_image_png`."""
    pil = PILImage.open(io.BytesIO(base64.b64decode(payload)))
    if pil.mode not in ("L", "RGB"):
        pil = pil.convert("RGB")
    arr = np.asarray(pil)
    return Image(arr.astype(np.float64) / 255.0)


class Scorer:
    """Base scorer: subclasses implement :meth:`score` and/or :meth:`score_text`."""

    def score(self, img: Image) -> ScoreVector:
        raise NotImplementedError(f"{type(self).__name__} does not score images")

    def score_text(self, text: str) -> ScoreVector:
        raise NotImplementedError(f"{type(self).__name__} does not score text")

    def score_batch(self, imgs, max_in_flight: int = 8) -> list[ScoreVector]:
        """Score many images; results align positionally with the inputs."""
        return self._batch(self.score, imgs, max_in_flight)

    def score_text_batch(self, texts, max_in_flight: int = 8) -> list[ScoreVector]:
        return self._batch(self.score_text, texts, max_in_flight)

    def _batch(self, fn, items, max_in_flight):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        out = []
        for i, item in enumerate(items):
            try:
                out.append(fn(item))
            except ScoringError as err:
                err.index = i
                raise
        return out

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ConstantScorer(Scorer):
    """Every class scores the same constant regardless of input."""

    def __init__(self, value: float, n_classes: int = 2):
        if not 0.0 <= value <= 1.0:
            raise ValueError("constant must lie in [0, 1]")
        self.value = float(value)
        self.n_classes = int(n_classes)

    def score(self, img: Image) -> ScoreVector:
        return ScoreVector(np.full(self.n_classes, self.value), kind="independent")

    def score_text(self, text: str) -> ScoreVector:
        return ScoreVector(np.full(self.n_classes, self.value), kind="independent")


class BlobScorer(Scorer):
    """Synthetic classifier whose evidence is a region of one target color.

    A pixel counts as visible when every channel is within ``tolerance`` of
    the target color; blurring or masking that moves pixels off the target
    hides them. Class 0 scores the visible fraction: relative to the whole
    image by default, or to ``expected_area`` pixels (capped at 1) when the
    size of the evidence region is known, so revealing the full region scores
    1.0. Revealing strictly more target-colored pixels never lowers the score.
    """

    def __init__(self, target_color, tolerance: float = 0.1, expected_area: int | None = None,
                 n_classes: int = 1):
        self.target_color = np.asarray(target_color, dtype=np.float64).ravel()
        if self.target_color.min() < 0.0 or self.target_color.max() > 1.0:
            raise ValueError("target color components must lie in [0, 1]")
        self.tolerance = float(tolerance)
        self.expected_area = expected_area
        self.n_classes = int(n_classes)

    def visible_pixels(self, img: Image) -> np.ndarray:
        if img.channels != self.target_color.size:
            raise ValueError("target color channel count must match the image")
        return (np.abs(img.data - self.target_color) <= self.tolerance).all(axis=2)

    def score(self, img: Image) -> ScoreVector:
        matching = int(self.visible_pixels(img).sum())
        denom = self.expected_area if self.expected_area else img.width * img.height
        scores = np.zeros(self.n_classes)
        scores[0] = min(1.0, matching / denom)
        return ScoreVector(scores, kind="independent")


class LinearScorer(Scorer):
    """Per-class scores from normalized weighted sums of the pixels.

    Class c scores clamp(<w_c, x> / <w_c, 1>, 0, 1) for its weight map w_c.
    """

    def __init__(self, weights):
        arr = np.asarray(weights, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[np.newaxis]
        if arr.ndim != 4:
            raise ValueError("weights must be one or more HxWxC maps")
        self.weights = arr
        self._norms = arr.reshape(arr.shape[0], -1).sum(axis=1)
        if np.any(self._norms == 0):
            raise ValueError("each weight map must have a nonzero sum")

    def score(self, img: Image) -> ScoreVector:
        if img.data.shape != self.weights.shape[1:]:
            raise ValueError("image dimensions must match the weight maps")
        dots = (self.weights * img.data).reshape(self.weights.shape[0], -1).sum(axis=1)
        return ScoreVector(np.clip(dots / self._norms, 0.0, 1.0), kind="independent")


class KeywordScorer(Scorer):
    """Text scorer: high score iff the keyword survives masking."""

    def __init__(self, keyword: str, present: float = 0.9, absent: float = 0.1):
        if not keyword:
            raise ValueError("keyword must be non-empty")
        self.keyword = keyword
        self.present = float(present)
        self.absent = float(absent)

    def score_text(self, text: str) -> ScoreVector:
        value = self.present if self.keyword in text.split() else self.absent
        return ScoreVector(np.array([value]), kind="independent")


def _parse_reply(line: bytes, expected_ids) -> tuple[int, ScoreVector]:
    """Validate one protocol reply; raises ScoringError on any defect."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as err:
        raise ScoringError(f"malformed scorer reply: {err}", payload=line) from err
    rid = msg.get("id")
    if rid not in expected_ids:
        raise ScoringError(f"reply id {rid!r} matches no outstanding request",
                           request_id=rid, payload=line)
    if "error" in msg:
        raise ScoringError(f"scorer error: {msg['error']}", request_id=rid, payload=line)
    try:
        vector = ScoreVector(np.asarray(msg["scores"], dtype=np.float64), kind=msg["kind"])
    except (KeyError, TypeError, ValueError) as err:
        raise ScoringError(f"invalid scores in reply: {err}", request_id=rid,
                           payload=line) from err
    return rid, vector


class StdioScorer(Scorer):
    """Client for a scorer subprocess speaking the protocol on its pipes.

    Requests are pipelined up to ``max_in_flight``; replies may arrive out of
    order and are matched by request id.
    """

    def __init__(self, command, timeout: float = 120.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("command must be non-empty")
        self.timeout = timeout
        self._proc = None
        self._buffer = b""
        self._next_id = 0

    def _ensure_proc(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
            self._buffer = b""
        return self._proc

    def _send(self, request: dict):
        proc = self._ensure_proc()
        data = json.dumps(request).encode() + b"\n"
        try:
            proc.stdin.write(data)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as err:
            raise ScoringError(f"scorer process died: {err}",
                               request_id=request["id"]) from err

    def _read_line(self) -> bytes:
        """One full reply line from the child, honoring the timeout."""
        proc = self._proc
        fd = proc.stdout.fileno()
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([fd], [], [], self.timeout)
            if not ready:
                raise ScoringError(f"scorer timed out after {self.timeout}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise ScoringError("scorer process closed its output",
                                   payload=self._buffer or None)
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _request_payload(self, item) -> dict:
        self._next_id += 1
        if isinstance(item, Image):
            return {"id": self._next_id, "png": encode_image_png(item)}
        return {"id": self._next_id, "text": str(item)}

    def _pipeline(self, items, max_in_flight) -> list[ScoreVector]:
        items = list(items)
        results: list[ScoreVector | None] = [None] * len(items)
        pending: dict[int, int] = {}
        sent = 0
        try:
            while len(pending) < min(max_in_flight, len(items)):
                request = self._request_payload(items[sent])
                self._send(request)
                pending[request["id"]] = sent
                sent += 1
            while pending:
                try:
                    rid, vector = _parse_reply(self._read_line(), pending)
                except ScoringError as err:
                    if err.index is None and err.request_id in pending:
                        err.index = pending[err.request_id]
                    raise
                results[pending.pop(rid)] = vector
                if sent < len(items):
                    request = self._request_payload(items[sent])
                    self._send(request)
                    pending[request["id"]] = sent
                    sent += 1
        except ScoringError as err:
            if err.index is None and pending:
                err.index = min(pending.values())
            raise
        return results

    def score(self, img: Image) -> ScoreVector:
        return self._pipeline([img], 1)[0]

    def score_text(self, text: str) -> ScoreVector:
        return self._pipeline([text], 1)[0]

    def score_batch(self, imgs, max_in_flight: int = 8) -> list[ScoreVector]:
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        return self._pipeline(imgs, max_in_flight)

    def score_text_batch(self, texts, max_in_flight: int = 8) -> list[ScoreVector]:
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        return self._pipeline(texts, max_in_flight)

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        self._proc = None


class HttpScorer(Scorer):
    """Client POSTing one protocol message per request to ``<url>/score``."""

    def __init__(self, url: str, timeout: float = 120.0):
        if not url:
            raise ValueError("url must be non-empty")
        self.url = url.rstrip("/") + "/score"
        self.timeout = timeout
        self._next_id = 0

    def _roundtrip(self, request: dict) -> ScoreVector:
        data = json.dumps(request).encode()
        http_request = urllib.request.Request(
            self.url, data=data, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(http_request, timeout=self.timeout) as resp:
                body = resp.read()
        except urllib.error.HTTPError as err:
            raise ScoringError(f"scorer HTTP error: {err}", request_id=request["id"],
                               payload=err.read()) from err
        except (urllib.error.URLError, OSError, TimeoutError) as err:
            raise ScoringError(f"scorer unreachable: {err}",
                               request_id=request["id"]) from err
        _, vector = _parse_reply(body.strip(), {request["id"]})
        return vector

    def _request_payload(self, item) -> dict:
        self._next_id += 1
        if isinstance(item, Image):
            return {"id": self._next_id, "png": encode_image_png(item)}
        return {"id": self._next_id, "text": str(item)}

    def score(self, img: Image) -> ScoreVector:
        return self._roundtrip(self._request_payload(img))

    def score_text(self, text: str) -> ScoreVector:
        return self._roundtrip(self._request_payload(text))

    def _batch(self, fn, items, max_in_flight):
        items = list(items)
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        requests = [self._request_payload(item) for item in items]
        results: list[ScoreVector | None] = [None] * len(items)
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            futures = {pool.submit(self._roundtrip, req): i
                       for i, req in enumerate(requests)}
            for future, i in futures.items():
                try:
                    results[i] = future.result()
                except ScoringError as err:
                    if err.index is None:
                        err.index = i
                    raise
        return results

    def score_batch(self, imgs, max_in_flight: int = 8) -> list[ScoreVector]:
        return self._batch(self.score, imgs, max_in_flight)

    def score_text_batch(self, texts, max_in_flight: int = 8) -> list[ScoreVector]:
        return self._batch(self.score_text, texts, max_in_flight)


def build_scorer(spec: ScorerSpec) -> Scorer:
    """Instantiate the scorer a spec describes."""
    params = spec.params
    if spec.kind == "builtin-constant":
        return ConstantScorer(params["value"], params.get("n_classes", 2))
    if spec.kind == "builtin-blob":
        return BlobScorer(
            params["target_color"],
            params.get("tolerance", 0.1),
            params.get("expected_area"),
        )
    if spec.kind == "builtin-linear":
        return LinearScorer(params["weights"])
    if spec.kind == "external-stdio":
        return StdioScorer(params["endpoint"], params.get("timeout", 120.0))
    return HttpScorer(params["endpoint"], params.get("timeout", 120.0))


def parse_scorer_arg(arg: str) -> ScorerSpec:
    """Parse a command-line scorer locator: stdio:"cmd" or http://host:port."""
    if arg.startswith("stdio:"):
        endpoint = arg[len("stdio:"):].strip().strip('"')
        return ScorerSpec("external-stdio", {"endpoint": endpoint})
    if arg.startswith(("http://", "https://")):
        return ScorerSpec("external-http", {"endpoint": arg})
    raise ValueError(f"unrecognized scorer locator {arg!r}; "
                     'expected stdio:"<command>" or http://host:port')
