#pragma once

namespace byzsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace byzsim
