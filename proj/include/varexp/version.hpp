#pragma once

namespace varexp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace varexp
