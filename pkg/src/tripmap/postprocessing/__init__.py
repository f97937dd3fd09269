"""
Scoring of fused maps.

"""
