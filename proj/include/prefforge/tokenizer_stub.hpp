#pragma once

#include <string_view>

namespace prefforge {

// Whitespace-delimited word count. Used by the mock backend for token
// accounting and as the fallback when an HTTP backend reports no usage.
long stub_token_count(std::string_view text);

}  // namespace prefforge
