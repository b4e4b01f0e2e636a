#pragma once

#include <iosfwd>

#include "vesicle/geometry.hpp"

namespace vesicle {

/// Wavefront OBJ dump of the surface on an (n_theta x n_phi) product grid.
/// Grid nodes are the vertices, quads are split into triangles, and the two
/// poles are capped with triangle fans.  Coordinates are Cartesian in a Y-up
/// right-handed frame with the polar axis along +Y; triangles are wound so
/// face normals point outward.
void write_surface_obj(std::ostream& out, const SurfaceCoefficients<double>& coeffs, int n_theta,
                       int n_phi);

}  // namespace vesicle
