// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>

namespace objocc::cli {

// Entry point of the `objocc` tool. Returns the process exit code: 0 on
// success, 1 on a runtime failure, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace objocc::cli
