#pragma once

#include <string>

#include "isa/geometry.hpp"

namespace isa {

// Loads an OFF or OBJ mesh (format picked by extension, falling back to
// content sniffing). Quads and larger faces are fan-triangulated. Vertex
// indices are validated; failures raise MalformedFileError naming the line.
//
// `scale` is an explicit uniform rescale applied to all vertices. Meshes
// whose bounding-box diagonal exceeds 50 after scaling (mm-scale CAD
// heuristic) produce a warning on stderr; nothing is rescaled silently.
Mesh load_mesh(const std::string& path, double scale = 1.0);

Mesh parse_off(const std::string& text, const std::string& name);
Mesh parse_obj(const std::string& text, const std::string& name);

void save_off(const Mesh& mesh, const std::string& path);

}  // namespace isa
