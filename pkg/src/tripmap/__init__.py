"""
tripmap: traversability-aware terrain mapping from range scans.

"""
