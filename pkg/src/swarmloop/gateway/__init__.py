from swarmloop.gateway.gateway import Gateway, LogEntry
from swarmloop.gateway.stdio import StdioServer
from swarmloop.gateway.tools import (
    ALL_TOOLS,
    CORE_TOOLS,
    HELPER_TOOLS,
    PLANNING_TOOLS,
    GatewayConfig,
    ToolCall,
    ToolDefinition,
    ToolResult,
    list_tools,
)

__all__ = [
    "ALL_TOOLS",
    "CORE_TOOLS",
    "HELPER_TOOLS",
    "PLANNING_TOOLS",
    "Gateway",
    "GatewayConfig",
    "LogEntry",
    "StdioServer",
    "ToolCall",
    "ToolDefinition",
    "ToolResult",
    "list_tools",
]
