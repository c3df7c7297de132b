#pragma once

#include <string>

#include "latentcloak/image.hpp"

namespace latentcloak {

/// Writes an 8-bit RGB PNG. Encoding settings are fixed so identical pixels
/// always produce identical bytes.
void write_png(const std::string& path, const Image& img);

/// Reads any PNG libpng understands and normalizes it to 8-bit RGB floats
/// in [0,1].
Image read_png(const std::string& path);

} // namespace latentcloak
