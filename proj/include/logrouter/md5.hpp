#pragma once

#include <string>
#include <string_view>

namespace logrouter {

// Lowercase hex MD5 of the raw bytes of `data`.
std::string md5_hex(std::string_view data);

}  // namespace logrouter
