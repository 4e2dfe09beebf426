#pragma once

// Minimal SVG renderers. Both take the JSON payloads written by the report
// step as their only input, so a plot never carries data the JSON lacks.

#include <string>

#include <nlohmann/json.hpp>

namespace promptcal::svg {

// Boxplots grouped by prompt, one box per method. Input: boxplots.json.
std::string render_boxplots(const nlohmann::json& boxplots);

// Scatter of log optimal weights against prior-match and null-input log
// weights. Input: alignment.json.
std::string render_alignment(const nlohmann::json& alignment);

}  // namespace promptcal::svg
