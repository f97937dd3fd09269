"""
Scene synthesis, ray casting and ground truth for desk-scale tests.

"""
