"""HTTP client for the compute service.

By default the client mounts the service in-process through an ASGI
transport, so CLI runs need no running server while still exercising the
exact request/response contract. Passing ``base_url`` targets a remote
service instead. Service-side domain errors are re-raised as their original
exception types.
"""

from __future__ import annotations

import asyncio

import httpx

from .errors import DOMAIN_ERRORS_BY_CODE, ConfigError
from .service import create_app


class _SyncASGITransport(httpx.BaseTransport):
    """Blocking adapter around httpx's async-only ASGI transport."""

    def __init__(self, app):
        self._transport = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def _dispatch():
            response = await self._transport.handle_async_request(request)
            body = await response.aread()
            await response.aclose()
            return httpx.Response(response.status_code, headers=response.headers,
                                  content=body, request=request)

        return asyncio.run(_dispatch())


class ServiceClient:
    def __init__(self, base_url: str | None = None, materials_path: str | None = None,
                 timeout: float = 300.0):
        if base_url is None:
            self._client = httpx.Client(
                transport=_SyncASGITransport(create_app(materials_path)),
                base_url="http://spdckit.local", timeout=timeout)
        else:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        response = self._client.request(method, path, json=payload)
        if response.status_code == 400:
            body = response.json()
            exc_type = DOMAIN_ERRORS_BY_CODE.get(body.get("error", ""),
                                                 DOMAIN_ERRORS_BY_CODE["domain_error"])
            raise exc_type(body.get("detail", "domain error"))
        if response.status_code == 422:
            raise ConfigError(f"service rejected the request: {response.text}")
        response.raise_for_status()
        return response.json()

    def get(self, path: str) -> dict:
        return self._request("GET", path)

    def post(self, path: str, payload: dict) -> dict:
        return self._request("POST", path, payload)

    # convenience wrappers -------------------------------------------------

    def health(self) -> dict:
        return self.get("/health")

    def materials(self) -> dict:
        return self.get("/materials")

    def index(self, payload: dict) -> dict:
        return self.post("/index", payload)

    def pm(self, payload: dict) -> dict:
        return self.post("/pm", payload)

    def spectrum(self, payload: dict) -> dict:
        return self.post("/spectrum", payload)

    def optimize(self, payload: dict) -> dict:
        return self.post("/optimize", payload)

    def phasemap(self, payload: dict) -> dict:
        return self.post("/phasemap", payload)

    def visibility(self, payload: dict) -> dict:
        return self.post("/visibility", payload)

    def scan_length(self, payload: dict) -> dict:
        return self.post("/scan-length", payload)

    def simulate(self, payload: dict) -> dict:
        return self.post("/simulate", payload)

    def analyze(self, payload: dict) -> dict:
        return self.post("/analyze", payload)
