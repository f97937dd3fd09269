"""
Common definitions used everywhere for consistency.

"""

#
# _|_|_|_|_|  _|_|_|    _|_|_|  _|_|_|
#     _|      _|    _|    _|    _|    _|
#     _|      _|_|_|      _|    _|_|_|
#     _|      _|    _|    _|    _|
#     _|      _|    _|  _|_|_|  _|
#
#

# risk colors, from lowest to highest risk
RISK_COLORS = ("#ffff00", "#00a000", "#0000ff", "#800080", "#000000")
EMPTY_COLOR = (255, 255, 255)

RISK_LAYERS = ("n_z", "r_step", "r_incl", "r_coll")
HEIGHT_LAYERS = ("h_max", "h_min")

C_BACKGROUND = "#ffffff"
C_GRID = "#d1d1d1"
