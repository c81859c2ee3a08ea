#pragma once

namespace lassonet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lassonet
