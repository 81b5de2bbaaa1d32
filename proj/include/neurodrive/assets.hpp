#pragma once

#include <string_view>

// Versioned JSON assets compiled into the library (sources live in assets/).
namespace neurodrive::assets {

std::string_view electrode_layout_json();
std::string_view colormap_json();
std::string_view face_features_json();

}  // namespace neurodrive::assets
