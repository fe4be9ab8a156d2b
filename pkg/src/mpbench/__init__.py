"""MCP 服务模块

包含体积（volume_mcp）、单次规划（plan_mcp）和参数扫描（sweep_mcp）三个 MCP 服务的实现
"""
