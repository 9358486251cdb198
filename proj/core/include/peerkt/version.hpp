#pragma once

#include <string_view>

namespace peerkt {

std::string_view version();

}  // namespace peerkt
