"""Camera-to-PLC route planning for warehouse mobile platforms.

The package turns top-down camera frames into collision-free routes and
motion vectors: color segmentation finds platforms, goals and obstacles;
a visibility-style graph is built around the obstacles that actually stand
in the way; Dijkstra picks the shortest route; the route is converted to
turn/distance vectors and written to PLC-style data blocks.
"""

__version__ = "0.1.0"
