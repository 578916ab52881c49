// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

namespace podtile {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace podtile
