#pragma once

#include <array>
#include <string>
#include <vector>

#include "hwstyle/trace.hpp"

namespace hwstyle {

/// Standalone SVG scatter plot, one colour per distinct label, with legend.
std::string scatter_svg(const std::vector<std::array<double, 2>>& points, const std::vector<std::string>& labels,
                        const std::string& title);

/// Grid of letter drawings; each trace is scaled into its own cell and the
/// starting point is marked.
std::string traces_svg(const std::vector<Trace>& traces, int columns = 8);

}  // namespace hwstyle
