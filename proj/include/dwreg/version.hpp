#pragma once

namespace dwreg {

inline constexpr const char* kVersion = "0.1.0";

// On-disk model format. Readers accept any minor revision within the same
// major revision.
inline constexpr int kModelFormatMajor = 1;
inline constexpr int kModelFormatMinor = 0;

}  // namespace dwreg
