#pragma once

#include <string>
#include <string_view>

#include "figforge/error.hpp"
#include "figforge/scene/canvas.hpp"

namespace figforge::scene {

/// Deterministic DrawIO document. Cell order follows
/// Canvas::ordered_elements() then connectors in insertion order; attribute
/// order is fixed. Scene fields DrawIO has no native key for (z_order,
/// parent_group, concept_tag) travel as extra style keys.
std::string to_mxgraph_xml(const Canvas& canvas);

struct MxGraphReadResult {
  Canvas canvas;
  Warnings warnings;  // unsupported cells and shapes; never fatal
};

/// Accepts plain and compressed (deflate + base64) diagram payloads. Unknown
/// shapes degrade to rect with the original style entries kept in
/// raw_style. Throws kMalformedXml for documents that do not parse.
MxGraphReadResult from_mxgraph_xml(std::string_view document);

}  // namespace figforge::scene
