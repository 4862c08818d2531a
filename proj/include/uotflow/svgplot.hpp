#pragma once

#include <ostream>
#include <string>
#include <vector>

// Minimal deterministic SVG emission (no timestamps, fixed float format).
namespace uotflow::svgplot {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;
    std::vector<double> value;  // optional per-point scalar -> opacity ramp
};

void scatter_svg(std::ostream& os, const std::string& title, const std::vector<Series>& series);

struct BarGroup {
    std::string label;
    std::string color;
    std::vector<double> values;  // one per category
};

void bar_svg(std::ostream& os, const std::string& title,
             const std::vector<std::string>& categories, const std::vector<BarGroup>& groups);

}  // namespace uotflow::svgplot
