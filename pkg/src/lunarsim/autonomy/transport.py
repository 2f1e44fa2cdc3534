"""Chat transports: the scripted oracle plugs in here, and a generic
chat-completions HTTP client covers hosted models.

Endpoint, model name, and credentials come from environment variables:
    VLM_ENDPOINT   e.g. https://api.example.com/v1/chat/completions
    VLM_MODEL      model identifier
    VLM_API_KEY    bearer token (optional for local endpoints)
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass, field
from typing import Protocol

import httpx


@dataclass(frozen=True)
class ChatMessage:
    role: str                 # "system" | "user" | "assistant"
    text: str
    image_png: bytes | None = None


class VlmTransport(Protocol):
    def send(self, messages: list[ChatMessage]) -> str: ...


class TransportError(Exception):
    pass


@dataclass
class HttpChatVlm:
    """OpenAI-style chat-completions client with image attachments."""
    endpoint: str = ""
    model: str = ""
    api_key: str = ""
    timeout: float = 60.0
    reasoning_effort: str | None = "low"  # passed through when set
    client: httpx.Client | None = field(default=None, repr=False)

    @staticmethod
    def from_env() -> "HttpChatVlm":
        endpoint = os.environ.get("VLM_ENDPOINT", "")
        if not endpoint:
            raise TransportError("VLM_ENDPOINT is not set")
        return HttpChatVlm(endpoint=endpoint,
                           model=os.environ.get("VLM_MODEL", ""),
                           api_key=os.environ.get("VLM_API_KEY", ""))

    def send(self, messages: list[ChatMessage]) -> str:
        payload: dict = {"model": self.model, "messages": []}
        if self.reasoning_effort:
            payload["reasoning_effort"] = self.reasoning_effort
        for m in messages:
            if m.image_png is None:
                payload["messages"].append({"role": m.role, "content": m.text})
            else:
                b64 = base64.b64encode(m.image_png).decode("ascii")
                payload["messages"].append({"role": m.role, "content": [
                    {"type": "text", "text": m.text},
                    {"type": "image_url",
                     "image_url": {"url": f"data:image/png;base64,{b64}"}},
                ]})
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        client = self.client or httpx.Client(timeout=self.timeout)
        try:
            resp = client.post(self.endpoint, json=payload, headers=headers,
                               timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise TransportError(f"chat endpoint failed: {exc}") from exc
        finally:
            if self.client is None:
                client.close()
