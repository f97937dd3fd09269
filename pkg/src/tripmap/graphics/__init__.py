"""
Rendering and plotting of terrain map layers.

"""
