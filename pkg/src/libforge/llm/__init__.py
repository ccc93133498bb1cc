"""Model access: completion backends, prompt builders and response parsing."""
from .backends import (
    Backend, ChatRequest, FunctionBackend, GatewayError, HttpBackend, RecordingBackend,
    ReplayBackend, ReplayMiss, RetryableError, fixtures_digest, list_fixtures, write_fixture,
)
from .prompts import (
    MAX_AGENT_HELPERS, Case, Failure, build_agent_prompt, build_comment_prompt, build_comment_prompts,
    build_decompose_prompt, build_edit_prompt, build_migration_prompt, build_refactor_prompt,
    build_retry_prompt,
)
from .responses import (
    ProposedProgram, RefactorProposal, extract_code, parse_edit_response, parse_program_response,
    parse_refactor_response,
)

__all__ = [
    "Backend", "Case", "ChatRequest", "Failure", "FunctionBackend", "GatewayError", "HttpBackend",
    "MAX_AGENT_HELPERS", "ProposedProgram", "RecordingBackend", "RefactorProposal", "ReplayBackend",
    "ReplayMiss", "RetryableError", "build_agent_prompt", "build_comment_prompt",
    "build_comment_prompts", "build_decompose_prompt", "build_edit_prompt", "build_migration_prompt",
    "build_refactor_prompt", "build_retry_prompt", "extract_code", "fixtures_digest",
    "list_fixtures", "parse_edit_response", "parse_program_response", "parse_refactor_response",
    "write_fixture",
]
