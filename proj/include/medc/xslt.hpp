#pragma once

#include "medc/transform.hpp"

#include <string>

namespace medc {

// XSLT 1.0 stylesheet equivalent to the spec: one named template per target
// tag. Parse steps become substring arithmetic (fixed-width patterns) or
// substring-before/after chains (separator-delimited templates);
// UnsupportedPatternError when a decomposition fits neither scheme.
std::string render_xslt(const TransformationSpec& spec);

} // namespace medc
