"""
QRC - Quality, Reputation and Credit ranking for bipartite communities
"""

__version__ = "1.0.0"
