#pragma once

#include <string>

#include "figforge/scene/canvas.hpp"

namespace figforge::scene {

/// Standalone SVG 1.1 document with viewBox (0, 0, page_width, page_height).
/// Every element and connector maps to exactly one id-bearing node; groups
/// become nested <g> nodes. Output is a pure function of the canvas.
std::string to_svg(const Canvas& canvas);

}  // namespace figforge::scene
