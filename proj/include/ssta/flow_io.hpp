#pragma once

#include <string>

#include "ssta/warp.hpp"

namespace ssta {

/// SSTAFLO1 container: magic "SSTAFLO1", u32le height, u32le width, then
/// h*w little-endian f32 du values (row-major) followed by dv. Flow values
/// are persisted at f32 precision.
void save_flow(const FlowField& flow, const std::string& path);
FlowField load_flow(const std::string& path);

}  // namespace ssta
