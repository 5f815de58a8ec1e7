// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/errors.hpp"

namespace scratchplot {

std::string GenerationExhaustedError::format(const std::map<std::string, std::size_t>& d) {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, count] : d) {
        if (!first) out += ", ";
        out += key + ": " + std::to_string(count);
        first = false;
    }
    return out + "}";
}

}  // namespace scratchplot
