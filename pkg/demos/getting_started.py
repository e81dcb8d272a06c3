from src.immersipy import (
    CurvatureInterval, SphereMesh, make, shape_field, curvature_range, designated_gauss, degree,
    orientation_class, halfspace_retraction, track, load_catalog,
)
from pprint import pprint

mesh = SphereMesh.icosphere(2)

# Curvatures of a bumped round sphere in the half-space model

f = make('bumpy_halfspace_sphere')
below = CurvatureInterval.parse('(-inf, -1)')

found = curvature_range(f, mesh, below)
pprint(found.as_json())

# Gauss map degree and orientation

report = degree(designated_gauss(f), mesh)
print(report)

print(orientation_class(f, below, mesh))

# Retract it onto the round sphere of curvature -2

path = halfspace_retraction(f, -2.0, below)
homotopy = track(path, mesh, steps=9, verbose=True)
pprint(homotopy.as_json())

# The other side of [-1, 1]

g = make('halfspace_sphere_above')
print(shape_field(g, mesh).lambdas[:3])

# Everything in the catalog

for entry in load_catalog():
    print(entry)
