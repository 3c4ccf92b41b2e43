"""Chat/embedding transport and prompt assembly."""

from hdldebug.llm.prompts import (
    CORRECT_CUE,
    extract_code,
    prompt_correct,
    prompt_infer_thought,
    prompt_single_call,
    prompt_thought,
    render_context,
    split_single_call,
)
from hdldebug.llm.transport import (
    ChatMessage,
    FixtureStore,
    GenRequest,
    MalformedResponse,
    MissingFixture,
    RetriesExhausted,
    RetryPolicy,
    Transport,
    TransportError,
    chat_response,
    complete,
    embed,
    embedding_response,
    request_digest,
)

__all__ = [
    "CORRECT_CUE",
    "ChatMessage",
    "FixtureStore",
    "GenRequest",
    "MalformedResponse",
    "MissingFixture",
    "RetriesExhausted",
    "RetryPolicy",
    "Transport",
    "TransportError",
    "chat_response",
    "complete",
    "embed",
    "embedding_response",
    "extract_code",
    "prompt_correct",
    "prompt_infer_thought",
    "prompt_single_call",
    "prompt_thought",
    "render_context",
    "request_digest",
    "split_single_call",
]
