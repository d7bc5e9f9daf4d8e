#include "prefforge/tokenizer_stub.hpp"

#include <cctype>

namespace prefforge {

long stub_token_count(std::string_view text) {
  long count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

}  // namespace prefforge
