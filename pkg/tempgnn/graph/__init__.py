from tempgnn.graph.session_graph import Direction, SessionGraph, build_graph, format_graph, neighbors

__all__ = ["Direction", "SessionGraph", "build_graph", "format_graph", "neighbors"]
