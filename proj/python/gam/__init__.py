"""Agentic memory engine: offline memorizer, online researcher."""

from gam._core import (
    BackendError,
    ChatExchange,
    ChatMessage,
    ConcurrentWrite,
    CorruptManifest,
    DimensionMismatch,
    EmbeddingProvider,
    EmptyCompletion,
    Error,
    FinalContext,
    HashingEmbedder,
    IdMismatch,
    IngestResult,
    IntegrationParseError,
    IntegrationResult,
    IoError,
    LoadedState,
    Memo,
    MemorizerConfig,
    MemoryState,
    MissingBinding,
    ModelBackend,
    NoMatchingRule,
    OutOfOrderSession,
    OutputFormat,
    Page,
    PageStore,
    PlanParseError,
    ReflectionOutcome,
    ReflectionParseError,
    Request,
    ResearchAborted,
    ResearcherConfig,
    ResearchResult,
    ResearchTrace,
    RetrievalResult,
    RetrievalTool,
    ScriptedBackend,
    ScriptRule,
    SearchPlan,
    Session,
    StoreLookup,
    StoreManifest,
    Termination,
    ToolCall,
    bleu1,
    count_tokens,
    extract_json_object,
    final_context_json,
    fnv1a64,
    ingest,
    is_blank,
    load,
    make_header,
    memorize,
    normalize_answer,
    persist,
    render_memory,
    render_page,
    research,
    segment_into_pages,
    store_exists,
    token_f1,
    tokenize,
    toolkit_description,
    trace_json,
    truncate_middle,
)

__all__ = [
    "BackendError",
    "ChatExchange",
    "ChatMessage",
    "ConcurrentWrite",
    "CorruptManifest",
    "DimensionMismatch",
    "EmbeddingProvider",
    "EmptyCompletion",
    "Error",
    "FinalContext",
    "HashingEmbedder",
    "IdMismatch",
    "IngestResult",
    "IntegrationParseError",
    "IntegrationResult",
    "IoError",
    "LoadedState",
    "Memo",
    "MemorizerConfig",
    "MemoryState",
    "MissingBinding",
    "ModelBackend",
    "NoMatchingRule",
    "OutOfOrderSession",
    "OutputFormat",
    "Page",
    "PageStore",
    "PlanParseError",
    "ReflectionOutcome",
    "ReflectionParseError",
    "Request",
    "ResearchAborted",
    "ResearcherConfig",
    "ResearchResult",
    "ResearchTrace",
    "RetrievalResult",
    "RetrievalTool",
    "ScriptedBackend",
    "ScriptRule",
    "SearchPlan",
    "Session",
    "StoreLookup",
    "StoreManifest",
    "Termination",
    "ToolCall",
    "bleu1",
    "count_tokens",
    "extract_json_object",
    "final_context_json",
    "fnv1a64",
    "ingest",
    "is_blank",
    "load",
    "make_header",
    "memorize",
    "normalize_answer",
    "persist",
    "render_memory",
    "render_page",
    "research",
    "segment_into_pages",
    "store_exists",
    "token_f1",
    "tokenize",
    "toolkit_description",
    "trace_json",
    "truncate_middle",
]
